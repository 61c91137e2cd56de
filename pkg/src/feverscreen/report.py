"""Report emission: JSON/CSV tables plus rendered matplotlib figures.

The delimited outputs are canonical (fixed column order, shortest
round-trip floats) so reruns with the same seed are byte-identical; figures
are rendered alongside them for quick inspection.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import EvaluationReport, Pair, SweepTable  # noqa: E402

FEATURES_CSV_HEADER = "trial_id,slope_f_per_s,t0_f,centroid,percent,truth_f"


def report_json(report: EvaluationReport) -> str:
    doc = {
        "mae_f": report.mae_f,
        "mean_err_f": report.mean_err_f,
        "sd_err_f": report.sd_err_f,
        "pearson_r": report.pearson_r,
        "r_squared": report.r_squared,
        "loa_low_f": report.loa_low_f,
        "loa_high_f": report.loa_high_f,
        "auc": report.auc,
        "best_threshold_f": report.best_threshold_f,
        "k": report.k,
        "per_fold_mae": list(report.per_fold_mae),
        "n_roc_points": len(report.roc),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def roc_csv(report: EvaluationReport) -> str:
    lines = ["fpr,tpr,threshold_f"]
    for p in report.roc:
        lines.append(f"{p.fpr!r},{p.tpr!r},{p.threshold_f!r}")
    return "\n".join(lines) + "\n"


def sweep_csv(table: SweepTable) -> str:
    header = "sensor," + ",".join(f"mae_{int(d)}s" for d in table.durations)
    lines = [header]
    for sensor in table.sensors:
        cells = []
        for d in table.durations:
            cell = table.cells[(sensor, d)]
            cells.append("" if cell is None else repr(cell.mae_f))
        lines.append(sensor + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def features_csv(rows: Sequence[tuple[str, float, float, float, float, float]]) -> str:
    lines = [FEATURES_CSV_HEADER]
    for trial_id, slope, t0, centroid, percent, truth in rows:
        lines.append(f"{trial_id},{slope!r},{t0!r},{centroid!r},{percent!r},{truth!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def save_roc_figure(report: EvaluationReport, path: str | Path):
    ordered = sorted(report.roc, key=lambda p: (p.fpr, p.tpr))
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([p.fpr for p in ordered], [p.tpr for p in ordered], marker=".", color="C0")
    ax.plot([0, 1], [0, 1], ls="--", color="gray", lw=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title(
        f"Fever screening ROC (AUC = {report.auc:.3f}, "
        f"threshold = {report.best_threshold_f:.2f}°F)"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bland_altman_figure(pairs: Sequence[Pair], report: EvaluationReport, path: str | Path):
    means = [(t + p) / 2 for t, p in pairs]
    diffs = [p - t for t, p in pairs]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(means, diffs, s=14, color="C0")
    for y, style in (
        (report.mean_err_f, "-"),
        (report.loa_low_f, "--"),
        (report.loa_high_f, "--"),
    ):
        ax.axhline(y, ls=style, color="C3", lw=0.9)
    ax.set_xlabel("Mean of truth and estimate (°F)")
    ax.set_ylabel("Estimate − truth (°F)")
    ax.set_title("Bland-Altman")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_correlation_figure(pairs: Sequence[Pair], report: EvaluationReport, path: str | Path):
    truth = [t for t, _ in pairs]
    pred = [p for _, p in pairs]
    lo, hi = min(truth + pred), max(truth + pred)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(truth, pred, s=14, color="C0")
    ax.plot([lo, hi], [lo, hi], ls="--", color="gray", lw=0.8)
    ax.set_xlabel("Ground truth (°F)")
    ax.set_ylabel("Estimated temperature (°F)")
    ax.set_title(f"Correlation (r = {report.pearson_r:.3f}, R² = {report.r_squared:.3f})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(table: SweepTable, path: str | Path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for sensor in table.sensors:
        xs, ys = [], []
        for d in table.durations:
            cell = table.cells[(sensor, d)]
            if cell is not None:
                xs.append(d)
                ys.append(cell.mae_f)
        if xs:
            ax.plot(xs, ys, marker="o", label=sensor)
    ax.set_xlabel("Contact duration (s)")
    ax.set_ylabel("MAE (°F)")
    ax.set_title("Estimate error vs contact duration")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
