"""Evaluation protocol: k-fold cross validation, error statistics,
correlation, Bland-Altman limits of agreement, ROC/AUC with an operating
threshold, and the per-sensor duration sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import models, thermal
from .errors import (
    DegenerateLabelsError,
    FeverscreenError,
    TrialValidationError,
    UnderdeterminedError,
)
from .thermal import SWEEP_DURATIONS_S, FeatureVector
from .trialdata import FEVER_CUTOFF_F, TrialRecord

Pair = tuple[float, float]  # (truth_f, pred_f)

DEFAULT_K = 10
DEFAULT_LOA_MULTIPLIER = 1.96


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    threshold_f: float


@dataclass(frozen=True)
class EvaluationReport:
    mae_f: float
    mean_err_f: float
    sd_err_f: float
    pearson_r: float
    r_squared: float
    loa_low_f: float
    loa_high_f: float
    roc: tuple[RocPoint, ...]
    auc: float
    best_threshold_f: float
    k: int
    per_fold_mae: tuple[float, ...]


@dataclass(frozen=True)
class SweepCell:
    mae_f: float
    n_used: int
    n_dropped: int


@dataclass(frozen=True)
class SweepTable:
    sensors: tuple[str, ...]
    durations: tuple[float, ...]
    cells: dict[tuple[str, float], Optional[SweepCell]]


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle, then contiguous folds with sizes differing by <= 1."""
    if k < 2:
        raise TrialValidationError(f"k must be >= 2, got {k}")
    if n < k:
        raise TrialValidationError(f"cannot split {n} examples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds, start = [], 0
    for size in sizes:
        folds.append(perm[start : start + size])
        start += size
    return folds


def kfold_predictions(
    dataset: Sequence[tuple[FeatureVector, float]], kind: str, k: int, seed: int
) -> list[Pair]:
    """Each example predicted exactly once by a model trained on the other folds.

    Pairs are returned in the original dataset order.
    """
    n = len(dataset)
    folds = kfold_split(n, k, seed)
    preds: list[Optional[float]] = [None] * n
    for fold in folds:
        test = set(int(i) for i in fold)
        train = [dataset[i] for i in range(n) if i not in test]
        model = models.fit(train, kind)
        for i in test:
            preds[i] = models.predict(model, dataset[i][0])
    return [(float(t), preds[i]) for i, (_, t) in enumerate(dataset)]


def _errors(pairs: Sequence[Pair]) -> np.ndarray:
    return np.array([p - t for t, p in pairs])


def error_stats(pairs: Sequence[Pair]) -> tuple[float, float, float]:
    """(MAE, mean error, sd of error); error = prediction - truth, sd uses n-1."""
    if not pairs:
        raise TrialValidationError("no prediction pairs")
    e = _errors(pairs)
    if len(e) < 2:
        raise TrialValidationError("sd of error undefined for a single pair")
    return float(np.abs(e).mean()), float(e.mean()), float(e.std(ddof=1))


def correlation(pairs: Sequence[Pair]) -> tuple[float, float]:
    """(Pearson r between truth and prediction, coefficient of determination)."""
    if len(pairs) < 3:
        raise TrialValidationError("correlation needs >= 3 pairs")
    t = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    st, sy = t - t.mean(), y - y.mean()
    denom = math.sqrt(float(st @ st) * float(sy @ sy))
    if denom == 0.0:
        raise TrialValidationError("zero variance in truth or predictions")
    r = float(st @ sy / denom)
    ss_res = float(((y - t) ** 2).sum())
    ss_tot = float((st**2).sum())
    if ss_tot == 0.0:
        raise TrialValidationError("zero variance in truth")
    return r, 1.0 - ss_res / ss_tot


def bland_altman(
    pairs: Sequence[Pair], multiplier: float = DEFAULT_LOA_MULTIPLIER
) -> tuple[float, float, float]:
    """(mean error, lower, upper limit of agreement) = mean -+ multiplier * sd."""
    if len(pairs) < 2:
        raise TrialValidationError("Bland-Altman needs >= 2 pairs")
    if multiplier <= 0:
        raise TrialValidationError(f"multiplier must be > 0, got {multiplier}")
    e = _errors(pairs)
    mean, sd = float(e.mean()), float(e.std(ddof=1))
    return mean, mean - multiplier * sd, mean + multiplier * sd


def roc(
    pairs: Sequence[Pair], positive_cutoff_f: float = FEVER_CUTOFF_F
) -> tuple[tuple[RocPoint, ...], float, float]:
    """ROC over the rule "positive iff prediction >= threshold".

    Candidate thresholds are the sorted unique predictions plus a +inf
    sentinel. AUC is the trapezoid over FPR-sorted points; the operating
    threshold maximizes Youden's J (ties resolved to the highest threshold).
    """
    truth = np.array([p[0] for p in pairs])
    preds = np.array([p[1] for p in pairs])
    labels = truth >= positive_cutoff_f
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"need both classes at cutoff {positive_cutoff_f} degF "
            f"(got {n_pos} positive, {n_neg} negative)"
        )
    thresholds = np.append(np.unique(preds), np.inf)
    points = []
    for thr in thresholds:
        flagged = preds >= thr
        tpr = float((flagged & labels).sum() / n_pos)
        fpr = float((flagged & ~labels).sum() / n_neg)
        points.append(RocPoint(fpr=fpr, tpr=tpr, threshold_f=float(thr)))
    ordered = sorted(points, key=lambda p: (p.fpr, p.tpr))
    trapezoid = getattr(np, "trapezoid", np.trapz)
    auc = float(trapezoid([p.tpr for p in ordered], [p.fpr for p in ordered]))
    best = max(points, key=lambda p: (p.tpr - p.fpr, p.threshold_f))
    return tuple(points), auc, best.threshold_f


def evaluate_pairs(
    pairs: Sequence[Pair],
    per_fold_mae: Sequence[float],
    k: int,
    loa_multiplier: float = DEFAULT_LOA_MULTIPLIER,
    fever_cutoff_f: float = FEVER_CUTOFF_F,
) -> EvaluationReport:
    """Assemble the full report from held-out prediction pairs."""
    mae, mean_err, sd_err = error_stats(pairs)
    r, r2 = correlation(pairs)
    _, loa_low, loa_high = bland_altman(pairs, loa_multiplier)
    points, auc, best_thr = roc(pairs, fever_cutoff_f)
    return EvaluationReport(
        mae_f=mae,
        mean_err_f=mean_err,
        sd_err_f=sd_err,
        pearson_r=r,
        r_squared=r2,
        loa_low_f=loa_low,
        loa_high_f=loa_high,
        roc=points,
        auc=auc,
        best_threshold_f=best_thr,
        k=k,
        per_fold_mae=tuple(per_fold_mae),
    )


def evaluate_dataset(
    dataset: Sequence[tuple[FeatureVector, float]],
    kind: str,
    k: int = DEFAULT_K,
    seed: int = 0,
    loa_multiplier: float = DEFAULT_LOA_MULTIPLIER,
    fever_cutoff_f: float = FEVER_CUTOFF_F,
) -> tuple[EvaluationReport, list[Pair]]:
    """Run k-fold cross validation and build the report. Returns the report
    together with the held-out (truth, prediction) pairs for plotting."""
    pairs = kfold_predictions(dataset, kind, k, seed)
    folds = kfold_split(len(dataset), k, seed)
    per_fold = [
        float(np.mean([abs(pairs[int(i)][1] - pairs[int(i)][0]) for i in fold]))
        for fold in folds
    ]
    report = evaluate_pairs(pairs, per_fold, k, loa_multiplier, fever_cutoff_f)
    return report, pairs


def duration_sweep(
    trials: Sequence[TrialRecord],
    kind: str,
    k: int,
    sensors: Sequence[str],
    durations: Sequence[float] = SWEEP_DURATIONS_S,
    seed: int = 0,
) -> SweepTable:
    """MAE per (sensor, duration) with features rebuilt on truncated series.

    Trials whose truncated series cannot produce features are dropped for
    that cell; a cell where k-fold is infeasible is marked absent (None).
    """
    cells: dict[tuple[str, float], Optional[SweepCell]] = {}
    for sensor in sensors:
        for duration in durations:
            dataset, dropped = [], 0
            for trial in trials:
                try:
                    f = thermal.build_features(trial, sensor, duration)
                    dataset.append((f, float(trial.ground_truth_f)))
                except FeverscreenError:
                    dropped += 1
            try:
                pairs = kfold_predictions(dataset, kind, k, seed)
                mae = float(np.mean([abs(p - t) for t, p in pairs]))
                cells[(sensor, duration)] = SweepCell(
                    mae_f=mae, n_used=len(dataset), n_dropped=dropped
                )
            except (TrialValidationError, UnderdeterminedError):
                cells[(sensor, duration)] = None
    return SweepTable(
        sensors=tuple(sensors), durations=tuple(durations), cells=cells
    )
