import pytest

from feverscreen import simulate, thermal, trialdata


@pytest.fixture(scope="session")
def profiles():
    return trialdata.default_profiles()


@pytest.fixture(scope="session")
def phone(profiles):
    return profiles["pixel4-like-phone"]


@pytest.fixture(scope="session")
def watch(profiles):
    return profiles["wear-watch"]


@pytest.fixture(scope="session")
def lab_trials():
    return simulate.simulate_lab_dataset(51, seed=0)


@pytest.fixture(scope="session")
def lab_features(lab_trials):
    return [
        (thermal.build_features(t, "pa_0", 180.0), t.ground_truth_f) for t in lab_trials
    ]


@pytest.fixture
def lab_trial(phone):
    # 13 full-width rows = 208 cells, 40.6% of the screen.
    config = simulate.SimConfig(
        device=phone,
        source_temp_f=101.0,
        initial_device_f=75.0,
        contact_patch=simulate.ContactPatch(16, 28, 0, 15),
        seed=42,
    )
    return simulate.simulate_trial(config, trial_id="fixture-lab")


@pytest.fixture
def watch_trial(watch):
    config = simulate.SimConfig(
        device=watch, source_temp_f=100.5, initial_device_f=76.0, seed=7
    )
    return simulate.simulate_trial(config, trial_id="fixture-watch")
