import json

import pytest

from feverscreen import simulate, trialdata
from feverscreen.errors import TrialParseError, TrialValidationError
from feverscreen.trialdata import (
    CapacitanceFrame,
    ThermistorSample,
    ThermistorSeries,
    TrialRecord,
    parse_trial,
    validate_dataset,
    write_trial,
)

MINIMAL_DOC = {
    "trial_id": "t1",
    "device": "pixel4-like-phone",
    "duration_s": 10.0,
    "ground_truth_f": None,
    "metadata": {},
    "series": [{"sensor_id": "pa_0", "samples": [[0.0, 75.0], [5.0, 75.5]]}],
    "frames": [],
}


def test_parse_minimal(profiles):
    trial = parse_trial(json.dumps(MINIMAL_DOC), profiles)
    assert len(trial.series) == 1
    assert trial.series[0].samples[1].temp_f == 75.5
    assert trial.ground_truth_f is None


def test_parse_accepts_bytes(profiles):
    trial = parse_trial(json.dumps(MINIMAL_DOC).encode(), profiles)
    assert trial.trial_id == "t1"


def test_wrong_matrix_dimensions(profiles):
    doc = dict(MINIMAL_DOC)
    doc["frames"] = [{"t_s": 0.0, "matrix": [[0] * 16 for _ in range(31)]}]
    with pytest.raises(TrialValidationError, match="matrix dimensions"):
        parse_trial(json.dumps(doc), profiles)


def test_malformed_json(profiles):
    with pytest.raises(TrialParseError):
        parse_trial("{not json", profiles)


def test_missing_field(profiles):
    doc = dict(MINIMAL_DOC)
    del doc["duration_s"]
    with pytest.raises(TrialParseError, match="duration_s"):
        parse_trial(json.dumps(doc), profiles)


@pytest.mark.parametrize(
    "mutate,message",
    [
        (lambda d: d["series"][0]["samples"].__setitem__(1, [0.0, 75.5]), "increasing"),
        (lambda d: d["series"][0]["samples"].__setitem__(0, [0.0, 20.0]), "sanity"),
        (lambda d: d["series"][0].__setitem__("sensor_id", "nope"), "not in profile"),
        (lambda d: d["series"][0]["samples"].__setitem__(1, [99.0, 75.5]), "beyond duration"),
        (lambda d: d.__setitem__("duration_s", -1.0), "duration_s"),
        (lambda d: d.__setitem__("device", "mystery"), "unknown device"),
    ],
)
def test_mutated_documents_rejected(profiles, mutate, message):
    doc = json.loads(json.dumps(MINIMAL_DOC))
    mutate(doc)
    with pytest.raises((TrialParseError, TrialValidationError), match=message):
        parse_trial(json.dumps(doc), profiles)


def test_negative_matrix_cell():
    rows = [[0] * 16 for _ in range(32)]
    rows[0][0] = -1
    with pytest.raises(TrialValidationError, match="non-negative"):
        CapacitanceFrame(0.0, rows)


def test_round_trip_identity(lab_trial, profiles):
    text = write_trial(lab_trial)
    back = parse_trial(text, profiles)
    assert back == lab_trial
    assert write_trial(back) == text


def test_write_deterministic(lab_trial):
    assert write_trial(lab_trial) == write_trial(lab_trial)


def test_same_seed_same_bytes(phone):
    config = simulate.SimConfig(
        device=phone, source_temp_f=100.0, initial_device_f=75.0, seed=42
    )
    a = write_trial(simulate.simulate_trial(config))
    b = write_trial(simulate.simulate_trial(config))
    assert a == b


def test_watch_profile_constraints(watch):
    assert watch.kind == "watch"
    assert not watch.has_screen_matrix
    with pytest.raises(TrialValidationError):
        trialdata.DeviceProfile(
            name="bad-watch",
            kind="watch",
            sensors=(watch.sensors[0], watch.sensors[0]),
            has_screen_matrix=False,
        )


def test_validate_dataset_lab(lab_trials):
    summary = validate_dataset(lab_trials)
    assert summary.n == 51
    assert 0 < summary.n_febrile < 51
    assert "pa_0" in summary.sensors_common
    assert 95.0 <= summary.temp_range_f[0] <= summary.temp_range_f[1] <= 102.5


def test_febrile_boundary_inclusive(phone):
    series = (ThermistorSeries("pa_0", (ThermistorSample(0.0, 75.0),)),)
    t = TrialRecord("b", phone, series, (), 100.4, 10.0)
    summary = validate_dataset([t])
    assert summary.n_febrile == 1


def test_disjoint_sensors_give_empty_intersection(phone):
    other = trialdata.DeviceProfile(
        name="odd",
        kind="phone",
        sensors=(trialdata.SensorSpec("weird", 1.0, 0.0, 0.0, 0.5, 0.01),),
        has_screen_matrix=True,
    )
    t1 = TrialRecord(
        "a", phone, (ThermistorSeries("pa_0", (ThermistorSample(0.0, 75.0),)),), (), 99.0, 10.0
    )
    t2 = TrialRecord(
        "b", other, (ThermistorSeries("weird", (ThermistorSample(0.0, 75.0),)),), (), 99.0, 10.0
    )
    assert validate_dataset([t1, t2]).sensors_common == frozenset()


def test_validate_dataset_errors(phone):
    with pytest.raises(TrialValidationError, match="empty"):
        validate_dataset([])
    t = TrialRecord(
        "nolabel", phone, (ThermistorSeries("pa_0", (ThermistorSample(0.0, 75.0),)),), (), None, 10.0
    )
    with pytest.raises(TrialValidationError, match="nolabel"):
        validate_dataset([t])


def test_dataset_dir_round_trip(tmp_path, lab_trial, watch_trial):
    trialdata.write_dataset([lab_trial, watch_trial], tmp_path / "ds")
    back = trialdata.load_dataset(tmp_path / "ds")
    assert back == [lab_trial, watch_trial]


def test_profiles_round_trip(profiles):
    text = trialdata.write_profiles(profiles)
    assert trialdata.parse_profiles(text) == profiles
