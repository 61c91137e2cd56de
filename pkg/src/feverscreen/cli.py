"""Command-line entry point wiring the pipeline: simulate corpora, extract
features, train and evaluate models, and predict single trials.

Every artifact-producing command writes a run manifest next to its outputs;
rerunning a command with the manifest's arguments reproduces the delimited
outputs byte-identically.

Exit status: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, evaluate, models, report, simulate, thermal, trialdata
from .errors import FeverscreenError, TrialParseError

PROFILES_ENV = "FEVERSCREEN_PROFILES"
DEFAULT_SENSOR = "pa_0"
SWEEP_SENSOR_DEFAULTS = ("pa_0", "dcxo0", "system_h", "charger", "battery")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_profiles(args) -> dict[str, trialdata.DeviceProfile]:
    path = args.profiles or os.environ.get(PROFILES_ENV)
    if path:
        return trialdata.parse_profiles(Path(path).read_text("utf-8"))
    return trialdata.default_profiles()


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace, outputs: list[str]):
    doc = {
        "command": command,
        "args": {
            k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
        },
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": sorted(outputs),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(doc, indent=2, ensure_ascii=False, default=str) + "\n", "utf-8"
    )


def cmd_simulate(args) -> int:
    profiles = _load_profiles(args)
    if args.profile not in profiles:
        raise FeverscreenError(f"unknown profile {args.profile!r}")
    device = profiles[args.profile]
    if args.kind == "lab":
        trials = simulate.simulate_lab_dataset(args.n, args.seed, device)
    elif args.kind == "clinical":
        trials = simulate.simulate_clinical_dataset(args.n, args.seed, device)
    else:
        patch = (
            simulate.ContactPatch(*args.patch) if args.patch else simulate.FULL_PATCH
        )
        config = simulate.SimConfig(
            device=device,
            source_temp_f=args.source_temp_f,
            initial_device_f=args.initial_f,
            contact_patch=patch,
            duration_s=args.duration,
            seed=args.seed,
        )
        trials = [simulate.simulate_trial(config, trial_id=f"single-{args.seed}")]
    out_dir = Path(args.out)
    trialdata.write_dataset(trials, out_dir)
    _write_manifest(
        out_dir, "simulate", args, ["manifest.json"] + [f"{t.trial_id}.json" for t in trials]
    )
    print(f"wrote {len(trials)} trial(s) to {out_dir}")
    return 0


def cmd_features(args) -> int:
    trials = trialdata.load_dataset(args.dataset)
    rows = []
    for trial in trials:
        try:
            f = thermal.build_features(trial, args.sensor, args.duration)
        except FeverscreenError as e:
            print(f"skipping {trial.trial_id}: {e}", file=sys.stderr)
            continue
        if trial.ground_truth_f is None:
            print(f"skipping {trial.trial_id}: no ground truth", file=sys.stderr)
            continue
        rows.append(
            (trial.trial_id, f.slope_f_per_s, f.t0_f, f.centroid, f.percent, trial.ground_truth_f)
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.features_csv(rows), "utf-8")
    _write_manifest(out.parent, "features", args, [out.name])
    print(f"wrote {len(rows)} feature row(s) to {out}")
    return 0


def _read_features_csv(path: Path) -> list[tuple[np.ndarray, float]]:
    lines = path.read_text("utf-8").splitlines()
    if not lines or lines[0] != report.FEATURES_CSV_HEADER:
        raise TrialParseError(f"{path}: unexpected features CSV header")
    dataset = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 6:
            raise TrialParseError(f"{path}: malformed row {line!r}")
        dataset.append((np.array([float(v) for v in parts[1:5]]), float(parts[5])))
    return dataset


def cmd_train(args) -> int:
    dataset = _read_features_csv(Path(args.features))
    model = models.fit(dataset, args.kind)
    residuals = [abs(models.predict(model, x) - y) for x, y in dataset]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(models.save_model(model), "utf-8")
    _write_manifest(out.parent, "train", args, [out.name])
    print(f"trained {args.kind} model on {len(dataset)} examples, "
          f"training MAE {float(np.mean(residuals)):.4f} °F -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    trials = trialdata.load_dataset(args.dataset)
    dataset = []
    for trial in trials:
        try:
            f = thermal.build_features(trial, args.sensor, args.duration)
            dataset.append((f, float(trial.ground_truth_f)))
        except (FeverscreenError, TypeError) as e:
            print(f"skipping {trial.trial_id}: {e}", file=sys.stderr)
    rep, pairs = evaluate.evaluate_dataset(
        dataset,
        args.kind,
        k=args.k,
        seed=args.seed,
        loa_multiplier=args.loa_multiplier,
        fever_cutoff_f=args.fever_cutoff,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = ["report.json", "roc.csv"]
    (out_dir / "report.json").write_text(report.report_json(rep), "utf-8")
    (out_dir / "roc.csv").write_text(report.roc_csv(rep), "utf-8")
    if not args.no_figures:
        report.save_roc_figure(rep, out_dir / "roc.png")
        report.save_bland_altman_figure(pairs, rep, out_dir / "bland_altman.png")
        report.save_correlation_figure(pairs, rep, out_dir / "correlation.png")
        outputs += ["roc.png", "bland_altman.png", "correlation.png"]

    if args.durations:
        durations = [float(v) for v in args.durations.split(",")]
        summary = trialdata.validate_dataset(trials)
        if args.sweep_sensors:
            sensors = args.sweep_sensors.split(",")
        else:
            sensors = [s for s in SWEEP_SENSOR_DEFAULTS if s in summary.sensors_common]
        table = evaluate.duration_sweep(
            trials, args.kind, args.k, sensors, durations, args.seed
        )
        (out_dir / "duration_sweep.csv").write_text(report.sweep_csv(table), "utf-8")
        outputs.append("duration_sweep.csv")
        if not args.no_figures:
            report.save_sweep_figure(table, out_dir / "duration_sweep.png")
            outputs.append("duration_sweep.png")

    _write_manifest(out_dir, "evaluate", args, outputs)
    print(
        f"n={len(dataset)} mae={rep.mae_f:.3f} auc={rep.auc:.3f} "
        f"threshold={rep.best_threshold_f:.3f} -> {out_dir}"
    )
    return 0


def cmd_predict(args) -> int:
    profiles = _load_profiles(args)
    trial = trialdata.parse_trial(Path(args.trial).read_text("utf-8"), profiles)
    model = models.load_model(Path(args.model).read_text("utf-8"))
    f = thermal.build_features(trial, args.sensor, args.duration)
    temp = models.predict(model, f)
    fever = "yes" if temp >= args.threshold else "no"
    print(f"temp_f={temp!r} fever={fever}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="feverscreen", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--profiles", help="path to a device profile JSON library")

    p = sub.add_parser("simulate", help="generate a synthetic trial corpus")
    common(p)
    p.add_argument("--profile", default="pixel4-like-phone")
    p.add_argument("--kind", choices=("lab", "clinical", "single"), default="lab")
    p.add_argument("--n", type=int, default=51)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--source-temp-f", type=float, default=100.0)
    p.add_argument("--initial-f", type=float, default=75.0)
    p.add_argument("--patch", type=int, nargs=4, metavar=("ROW_LO", "ROW_HI", "COL_LO", "COL_HI"))
    p.add_argument("--duration", type=float, default=thermal.DEFAULT_DURATION_S)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="extract per-trial feature rows to CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sensor", default=DEFAULT_SENSOR)
    p.add_argument("--duration", type=float, default=thermal.DEFAULT_DURATION_S)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit a regression model from a features CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=models.KINDS, default="quadratic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="k-fold evaluation with report, CSVs, and figures")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sensor", default=DEFAULT_SENSOR)
    p.add_argument("--kind", choices=models.KINDS, default="quadratic")
    p.add_argument("--k", type=int, default=evaluate.DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=thermal.DEFAULT_DURATION_S)
    p.add_argument("--loa-multiplier", type=float, default=evaluate.DEFAULT_LOA_MULTIPLIER)
    p.add_argument("--fever-cutoff", type=float, default=trialdata.FEVER_CUTOFF_F)
    p.add_argument("--durations", help="comma-separated sweep durations in seconds")
    p.add_argument("--sweep-sensors", help="comma-separated sensors for the sweep")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="estimate temperature for one trial file")
    common(p)
    p.add_argument("--trial", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--sensor", default=DEFAULT_SENSOR)
    p.add_argument("--duration", type=float, default=thermal.DEFAULT_DURATION_S)
    p.add_argument("--threshold", type=float, default=trialdata.FEVER_CUTOFF_F)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FeverscreenError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
