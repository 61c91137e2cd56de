"""Heat-transfer math and per-trial feature assembly.

The device warms toward the source like T(t) = (T0 - Tpeak) * exp(-k t) + Tpeak.
Over a short contact window the curve is shallow enough to approximate as
T(t) = m t + T0; the fixed-duration slope m is the primary fever feature.
Sparse, fast-warming watch series are instead fit with the exponential model
directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import contact
from .errors import (
    CoolingDirectionError,
    InsufficientDataError,
    SensorNotFoundError,
    TrialValidationError,
)
from .trialdata import ThermistorSeries, TrialRecord

DEFAULT_DURATION_S = 180.0
SWEEP_DURATIONS_S = (30.0, 60.0, 90.0, 120.0, 150.0, 180.0)

MIN_EXP_SAMPLES = 4
K_GRID_LO = 1e-4
K_GRID_HI = 0.1
K_GRID_POINTS = 60
REFINE_TOL = 1e-10
REFINE_MAX_ITER = 100


@dataclass(frozen=True)
class ExpFit:
    """Result of fitting the exponential warming model to one series."""

    t0_f: float
    t_peak_f: float
    k: float
    rss: float
    n: int

    def __post_init__(self):
        if self.k <= 0:
            raise TrialValidationError(f"fitted k must be > 0, got {self.k}")
        if self.t_peak_f < self.t0_f:
            raise TrialValidationError("t_peak_f below t0_f in a heating-only model")
        if self.n < MIN_EXP_SAMPLES:
            raise TrialValidationError(f"exponential fit needs >= {MIN_EXP_SAMPLES} samples")

    def value_at(self, t_s: float) -> float:
        return (self.t0_f - self.t_peak_f) * math.exp(-self.k * t_s) + self.t_peak_f


@dataclass(frozen=True)
class FeatureVector:
    """Model inputs for one trial: warming slope, initial device temperature,
    contact centroid, and contact percent."""

    slope_f_per_s: float
    t0_f: float
    centroid: float
    percent: float
    sensor_id: str
    duration_s: float

    def __post_init__(self):
        if self.duration_s <= 0:
            raise TrialValidationError("duration_s must be > 0")
        if not (0.0 <= self.centroid <= 1.0) or not (0.0 <= self.percent <= 1.0):
            raise TrialValidationError("centroid and percent must be in [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.slope_f_per_s, self.t0_f, self.centroid, self.percent])


def truncate_series(series: ThermistorSeries, duration_s: float) -> ThermistorSeries:
    """Keep samples with t_s <= duration_s; error if nothing remains."""
    if duration_s <= 0:
        raise InsufficientDataError(f"duration_s must be > 0, got {duration_s}")
    kept = tuple(s for s in series.samples if s.t_s <= duration_s)
    if not kept:
        raise InsufficientDataError(
            f"series {series.sensor_id!r} has no samples within {duration_s} s"
        )
    return ThermistorSeries(series.sensor_id, kept)


def linear_slope(series: ThermistorSeries) -> tuple[float, float]:
    """OLS slope of temperature against time, paired with the first reading.

    Returns (m in degF/s, t0 in degF). The intercept convention is the first
    observed sample, not the fitted intercept.
    """
    if len(series.samples) < 2:
        raise InsufficientDataError(
            f"series {series.sensor_id!r}: need >= 2 samples for a slope"
        )
    t = np.array(series.times)
    y = np.array(series.temps)
    dt = t - t.mean()
    denom = float(dt @ dt)
    if denom == 0.0:
        raise InsufficientDataError(f"series {series.sensor_id!r}: no time spread")
    m = float(dt @ (y - y.mean()) / denom)
    return m, float(y[0])


def simple_rate(series: ThermistorSeries) -> float:
    """Endpoint rate: (last - first temperature) / elapsed time."""
    if len(series.samples) < 2:
        raise InsufficientDataError(
            f"series {series.sensor_id!r}: need >= 2 samples for a rate"
        )
    first, last = series.samples[0], series.samples[-1]
    span = last.t_s - first.t_s
    if span <= 0:
        raise InsufficientDataError(f"series {series.sensor_id!r}: zero time span")
    return (last.temp_f - first.temp_f) / span


def _exp_rss(t: np.ndarray, y: np.ndarray, t0: float, tp: float, k: float) -> float:
    r = (t0 - tp) * np.exp(-k * t) + tp - y
    return float(r @ r)


def _best_tp_for_k(t: np.ndarray, y: np.ndarray, t0: float, k: float) -> float:
    # With k fixed, the model is linear in tp: y ~= t0*e + tp*(1-e).
    g = 1.0 - np.exp(-k * t)
    denom = float(g @ g)
    if denom == 0.0:
        return float(y[-1])
    return float(g @ (y - t0 * (1.0 - g)) / denom)


def _refine_k_fixed_tp(
    t: np.ndarray, y: np.ndarray, t0: float, tp: float, k: float
) -> float:
    # Golden-section search on log(k) around the current estimate.
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = math.log(max(k / 10.0, 1e-8)), math.log(k * 10.0)
    c = hi - phi * (hi - lo)
    d = lo + phi * (hi - lo)
    fc = _exp_rss(t, y, t0, tp, math.exp(c))
    fd = _exp_rss(t, y, t0, tp, math.exp(d))
    for _ in range(200):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - phi * (hi - lo)
            fc = _exp_rss(t, y, t0, tp, math.exp(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + phi * (hi - lo)
            fd = _exp_rss(t, y, t0, tp, math.exp(d))
        if hi - lo < 1e-12:
            break
    return math.exp((lo + hi) / 2.0)


def fit_exponential(series: ThermistorSeries) -> ExpFit:
    """Fit (t_peak, k) of the exponential warming model, t0 pinned to the
    first sample.

    A log-spaced grid over k (with the conditionally optimal t_peak per k)
    locates the shallow RSS valley; damped Gauss-Newton then polishes the
    pair. t_peak is clamped to at least the last observed temperature to rule
    out degenerate large-k fits.
    """
    n = len(series.samples)
    if n < MIN_EXP_SAMPLES:
        raise InsufficientDataError(
            f"series {series.sensor_id!r}: exponential fit needs >= "
            f"{MIN_EXP_SAMPLES} samples, got {n} (series too sparse)"
        )
    t = np.array(series.times)
    y = np.array(series.temps)
    t0 = float(y[0])
    y_last = float(y[-1])
    if y_last < t0:
        raise CoolingDirectionError(
            f"series {series.sensor_id!r}: last reading below the first; "
            "device warmer than source is out of scope"
        )

    # Coarse grid over k with closed-form conditional t_peak.
    best_k, best_tp, best_rss = None, None, math.inf
    for k in np.logspace(math.log10(K_GRID_LO), math.log10(K_GRID_HI), K_GRID_POINTS):
        tp = max(_best_tp_for_k(t, y, t0, float(k)), y_last)
        rss = _exp_rss(t, y, t0, tp, float(k))
        if rss < best_rss:
            best_k, best_tp, best_rss = float(k), tp, rss

    # Damped Gauss-Newton on (t_peak, k).
    tp, k, rss = best_tp, best_k, best_rss
    for _ in range(REFINE_MAX_ITER):
        e = np.exp(-k * t)
        r = (t0 - tp) * e + tp - y
        J = np.column_stack([1.0 - e, -(t0 - tp) * t * e])
        try:
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        improved = False
        for _ in range(30):
            tp_new = tp - scale * float(step[0])
            k_new = k - scale * float(step[1])
            if k_new > 0:
                rss_new = _exp_rss(t, y, t0, tp_new, k_new)
                if rss_new < rss:
                    improved = True
                    break
            scale /= 2.0
        if not improved:
            break
        rel = (rss - rss_new) / rss if rss > 0 else 0.0
        tp, k, rss = tp_new, k_new, rss_new
        if rel < REFINE_TOL:
            break

    if tp < y_last:
        tp = y_last
        k = _refine_k_fixed_tp(t, y, t0, tp, k)
        rss = _exp_rss(t, y, t0, tp, k)
    return ExpFit(t0_f=t0, t_peak_f=tp, k=k, rss=rss, n=n)


def build_features(
    trial: TrialRecord, sensor_id: str, duration_s: float = DEFAULT_DURATION_S
) -> FeatureVector:
    """Assemble the four model features for one trial and sensor.

    Watch trials have no capacitance frames; by convention the whole screen is
    in contact (centroid = percent = 1).
    """
    try:
        series = trial.get_series(sensor_id)
    except KeyError:
        raise SensorNotFoundError(
            f"trial {trial.trial_id!r} has no series for sensor {sensor_id!r}"
        ) from None
    m, t0 = linear_slope(truncate_series(series, duration_s))

    if trial.device.kind == "watch":
        centroid, percent = 1.0, 1.0
    else:
        if not trial.frames:
            raise TrialValidationError(
                f"trial {trial.trial_id!r}: phone trial has no capacitance frames"
            )
        stats = contact.contact_stats(trial.frames)
        if stats.centroid is None:
            raise TrialValidationError(
                f"trial {trial.trial_id!r}: no screen contact detected"
            )
        centroid, percent = stats.centroid, stats.percent

    return FeatureVector(
        slope_f_per_s=m,
        t0_f=t0,
        centroid=centroid,
        percent=percent,
        sensor_id=sensor_id,
        duration_s=duration_s,
    )
