import dataclasses
import math

import numpy as np
import pytest

from feverscreen import contact, models, simulate, thermal, trialdata
from feverscreen.errors import TrialValidationError
from feverscreen.simulate import (
    FULL_PATCH,
    ContactPatch,
    SimConfig,
    effective_k,
    simulate_clinical_dataset,
    simulate_lab_dataset,
    simulate_trial,
)


def test_effective_k_identity_configuration(phone):
    sensor = dataclasses.replace(phone.sensor("pa_0"), position=0.5)
    assert effective_k(sensor, FULL_PATCH) == pytest.approx(sensor.base_k)


def test_effective_k_linear_in_percent(phone):
    sensor = phone.sensor("pa_0")
    full = ContactPatch(8, 23, 0, 15)  # 16 rows, centroid 0.5
    half = ContactPatch(12, 19, 0, 15)  # 8 rows, same centroid
    assert half.centroid == full.centroid
    assert effective_k(sensor, half) == pytest.approx(effective_k(sensor, full) / 2)


def test_effective_k_max_distance_attenuation(phone):
    sensor = dataclasses.replace(phone.sensor("pa_0"), position=0.0)
    patch = ContactPatch(31, 31, 0, 15)  # centroid 1.0
    assert effective_k(sensor, patch) == pytest.approx(
        sensor.base_k * patch.percent * 0.5
    )


def test_noiseless_trial_matches_closed_form(phone):
    sensor = phone.sensor("pa_0")
    patch = ContactPatch(0, 31, 0, 15)
    config = SimConfig(
        device=phone,
        source_temp_f=100.0,
        initial_device_f=75.0,
        contact_patch=patch,
        noise_sd_f=0.0,
        seed=1,
    )
    trial = simulate_trial(config)
    k = effective_k(sensor, patch)
    for s in trial.get_series("pa_0").samples:
        expected = (75.0 - 100.0) * math.exp(-k * s.t_s) + 100.0
        assert s.temp_f == pytest.approx(expected, abs=1e-12)


def test_seeded_determinism(phone):
    config = SimConfig(device=phone, source_temp_f=99.5, initial_device_f=74.0, seed=42)
    a = trialdata.write_trial(simulate_trial(config))
    b = trialdata.write_trial(simulate_trial(config))
    assert a == b


def test_patch_recovery_through_contact_module(phone):
    patch = ContactPatch(20, 29, 2, 13)
    config = SimConfig(
        device=phone, source_temp_f=101.0, initial_device_f=76.0, contact_patch=patch, seed=5
    )
    trial = simulate_trial(config)
    stats = contact.contact_stats(trial.frames)
    assert abs(stats.percent - patch.percent) <= 1 / 512
    assert abs(stats.centroid - patch.centroid) <= 1 / 31


def test_heating_only_invariant(phone):
    with pytest.raises(TrialValidationError):
        SimConfig(device=phone, source_temp_f=75.0, initial_device_f=80.0)


def test_frame_count_and_schedule(phone):
    config = SimConfig(device=phone, source_temp_f=100.0, initial_device_f=75.0, seed=0)
    trial = simulate_trial(config)
    assert len(trial.frames) == 36
    assert trial.frames[0].t_s == 0.0
    assert trial.frames[-1].t_s == 175.0


def test_battery_sparse_in_180s(phone):
    config = SimConfig(device=phone, source_temp_f=100.0, initial_device_f=75.0, seed=0)
    trial = simulate_trial(config)
    assert len(trial.get_series("battery").samples) <= 4


def test_watch_trial_has_no_frames(watch_trial):
    assert watch_trial.frames == ()
    assert len(watch_trial.series) == 1


def test_final_temp_monotone_in_source(phone):
    finals = []
    for source in (96.0, 98.0, 100.0, 102.0):
        config = SimConfig(
            device=phone,
            source_temp_f=source,
            initial_device_f=75.0,
            noise_sd_f=0.0,
            seed=3,
        )
        trial = simulate_trial(config)
        finals.append([s.samples[-1].temp_f for s in trial.series])
    for a, b in zip(finals, finals[1:]):
        assert all(x < y for x, y in zip(a, b))


def test_round_trip_validation(lab_trial, profiles):
    text = trialdata.write_trial(lab_trial)
    assert trialdata.parse_trial(text, profiles) == lab_trial


def test_lab_dataset_shape(lab_trials):
    assert len(lab_trials) == 51
    truths = [t.ground_truth_f for t in lab_trials]
    assert all(95.0 <= v <= 102.5 for v in truths)
    assert any(v >= 100.4 for v in truths) and any(v < 100.4 for v in truths)
    near = sum(1 for v in truths if 99.4 <= v <= 101.4)
    assert near / len(truths) >= 0.40
    initials = [t.get_series("pa_0").samples[0].temp_f for t in lab_trials]
    assert all(69.0 <= v <= 84.0 for v in initials)


def test_lab_dataset_contact_ranges(lab_trials):
    percents = [contact.contact_stats(t.frames).percent for t in lab_trials]
    assert all(0.30 - 1 / 512 <= p <= 0.50 + 1 / 512 for p in percents)
    top = sum(
        1
        for t in lab_trials
        if int(t.metadata["patch"].split(",")[0]) >= simulate.TOP_THIRD_ROW_LO
    )
    assert top == round(0.7 * 51)


def test_clinical_dataset_shape():
    trials = simulate_clinical_dataset(7, seed=1)
    assert len(trials) == 7
    for t in trials:
        p = contact.contact_stats(t.frames).percent
        assert 0.08 <= p <= 0.20
        assert 97.0 <= t.ground_truth_f <= 101.0


def test_clinical_slope_lower_than_lab_at_matched_source(lab_trials):
    clinical = simulate_clinical_dataset(12, seed=2)

    def norm_slopes(trials):
        out = []
        for t in trials:
            f = thermal.build_features(t, "pa_0", 180.0)
            out.append(f.slope_f_per_s / (t.ground_truth_f - f.t0_f))
        return np.mean(out)

    assert norm_slopes(clinical) < norm_slopes(lab_trials)


def test_batch_seeding_order_independent(phone):
    a = simulate_lab_dataset(12, seed=4, device=phone)
    b = simulate_lab_dataset(12, seed=4, device=phone)
    assert [trialdata.write_trial(t) for t in a] == [trialdata.write_trial(t) for t in b]


def test_noiseless_pipeline_recovers_source(phone):
    # zero-noise end-to-end: simulate -> features -> fit -> predict
    rng = np.random.default_rng(12)
    trials = []
    for i in range(40):
        rows = int(rng.integers(10, 17))
        row_lo = int(rng.integers(0, 32 - rows + 1))
        config = SimConfig(
            device=phone,
            source_temp_f=float(rng.uniform(96, 102)),
            initial_device_f=float(rng.uniform(71, 82)),
            contact_patch=ContactPatch(row_lo, row_lo + rows - 1, 0, 15),
            noise_sd_f=0.0,
            seed=int(i),
        )
        trials.append(simulate_trial(config, trial_id=f"clean-{i}"))
    ds = [(thermal.build_features(t, "pa_0", 180.0), t.ground_truth_f) for t in trials]
    model = models.fit(ds[:30], "quadratic")
    errs = [abs(models.predict(model, f) - truth) for f, truth in ds[30:]]
    assert float(np.mean(errs)) < 0.1
