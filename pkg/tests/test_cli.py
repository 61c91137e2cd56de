import json
from pathlib import Path

import pytest

from feverscreen import models, thermal, trialdata
from feverscreen.cli import main
from feverscreen.report import FEATURES_CSV_HEADER


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus") / "lab"
    assert run("simulate", "--kind", "lab", "--n", 24, "--seed", 1, "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def features_csv(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("feat") / "features.csv"
    assert run("features", "--dataset", corpus, "--sensor", "pa_0", "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def model_file(features_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.json"
    assert run("train", "--features", features_csv, "--kind", "quadratic", "--out", out) == 0
    return out


def test_simulate_writes_corpus_and_manifest(corpus):
    manifest = json.loads((corpus / "manifest.json").read_text())
    assert len(manifest["trials"]) == 24
    assert (corpus / "run_manifest.json").exists()
    assert len(trialdata.load_dataset(corpus)) == 24


def test_simulate_rerun_identical_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", "--kind", "lab", "--n", 12, "--seed", 5, "--out", a) == 0
    assert run("simulate", "--kind", "lab", "--n", 12, "--seed", 5, "--out", b) == 0
    names = json.loads((a / "manifest.json").read_text())["trials"]
    for name in names + ["manifest.json"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_single(tmp_path):
    out = tmp_path / "single"
    assert (
        run(
            "simulate", "--kind", "single", "--source-temp-f", 101.2, "--initial-f", 74.0,
            "--patch", 20, 29, 0, 15, "--seed", 3, "--out", out,
        )
        == 0
    )
    assert len(trialdata.load_dataset(out)) == 1


def test_simulate_unknown_profile(tmp_path):
    assert run("simulate", "--profile", "nope", "--out", tmp_path / "x") == 1


def test_features_header_and_values(features_csv, corpus):
    lines = features_csv.read_text().splitlines()
    assert lines[0] == FEATURES_CSV_HEADER
    trials = trialdata.load_dataset(corpus)
    assert len(lines) - 1 <= len(trials)
    by_id = {t.trial_id: t for t in trials}
    parts = lines[1].split(",")
    f = thermal.build_features(by_id[parts[0]], "pa_0", 180.0)
    assert float(parts[1]) == f.slope_f_per_s
    assert float(parts[5]) == by_id[parts[0]].ground_truth_f


def test_train_and_predict_matches_library(model_file, corpus, tmp_path):
    trials = trialdata.load_dataset(corpus)
    trial = trials[0]
    trial_file = tmp_path / "one.json"
    trial_file.write_text(trialdata.write_trial(trial))

    model = models.load_model(model_file.read_text())
    f = thermal.build_features(trial, "pa_0", 180.0)
    expected = models.predict(model, f)

    import contextlib, io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = run("predict", "--trial", trial_file, "--model", model_file)
    assert code == 0
    line = buf.getvalue().strip()
    value, fever = line.split(" ")
    assert value == f"temp_f={expected!r}"
    assert fever == ("fever=yes" if expected >= 100.4 else "fever=no")
    assert 90.0 <= expected <= 110.0


def test_train_underdetermined_csv(tmp_path, features_csv):
    small = tmp_path / "small.csv"
    lines = features_csv.read_text().splitlines()
    small.write_text("\n".join(lines[:6]) + "\n")
    assert run("train", "--features", small, "--kind", "quadratic", "--out", tmp_path / "m.json") == 1


def test_evaluate_report_schema(corpus, tmp_path):
    out = tmp_path / "rep"
    assert (
        run(
            "evaluate", "--dataset", corpus, "--k", 6, "--out", out,
            "--durations", "90,180", "--sweep-sensors", "pa_0",
        )
        == 0
    )
    report = json.loads((out / "report.json").read_text())
    for key in ("mae_f", "auc", "best_threshold_f", "loa_low_f", "loa_high_f", "per_fold_mae"):
        assert key in report
    assert (out / "roc.csv").read_text().splitlines()[0] == "fpr,tpr,threshold_f"
    sweep = (out / "duration_sweep.csv").read_text().splitlines()
    assert sweep[0] == "sensor,mae_90s,mae_180s"
    for fig in ("roc.png", "bland_altman.png", "correlation.png", "duration_sweep.png"):
        assert (out / fig).stat().st_size > 0


def test_evaluate_deterministic(corpus, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(
            "evaluate", "--dataset", corpus, "--k", 6, "--seed", 2, "--out", out, "--no-figures"
        ) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "roc.csv").read_bytes() == (b / "roc.csv").read_bytes()


def test_missing_dataset_dir_is_validation_error(tmp_path):
    assert run("evaluate", "--dataset", tmp_path / "nope", "--out", tmp_path / "o") == 1


def test_missing_trial_file_is_io_error(tmp_path, model_file):
    assert run("predict", "--trial", tmp_path / "missing.json", "--model", model_file) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        run("evaluate")  # missing required arguments
    assert exc.value.code == 1


def test_profiles_env_override(tmp_path, monkeypatch, corpus):
    profiles_path = tmp_path / "profiles.json"
    profiles_path.write_text(trialdata.write_profiles(trialdata.default_profiles()))
    monkeypatch.setenv("FEVERSCREEN_PROFILES", str(profiles_path))
    out = tmp_path / "env-sim"
    assert run("simulate", "--kind", "clinical", "--n", 7, "--seed", 2, "--out", out) == 0
    assert len(trialdata.load_dataset(out)) == 7
