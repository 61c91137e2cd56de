"""Synthetic trial generator replicating the lab rig: a constant-temperature
source (water bag on a precision heater) in partial contact with a device
whose thermistors warm exponentially toward the source temperature.

Serves as the toolkit's ground-truth oracle: the configured source
temperature, contact patch, and rate constants are known exactly, so every
downstream feature and model can be checked against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import TrialValidationError
from .trialdata import (
    MATRIX_COLS,
    MATRIX_ROWS,
    CapacitanceFrame,
    DeviceProfile,
    SensorSpec,
    ThermistorSample,
    ThermistorSeries,
    TrialRecord,
    default_profiles,
)

DEFAULT_DURATION_S = 180.0
DEFAULT_FRAME_PERIOD_S = 5.0

PATCH_VALUE_LO, PATCH_VALUE_HI = 800, 1000
BACKGROUND_VALUE_LO, BACKGROUND_VALUE_HI = 0, 50

LAB_SOURCE_LO_F, LAB_SOURCE_HI_F = 95.0, 102.5
LAB_BOOST_LO_F, LAB_BOOST_HI_F = 99.4, 101.4  # density doubled around the cutoff
INITIAL_LO_F, INITIAL_HI_F = 70.0, 83.0
CLINICAL_SOURCE_LO_F, CLINICAL_SOURCE_HI_F = 97.0, 101.0

TOP_THIRD_ROW_LO = 21
TOP_BIAS_FRACTION = 0.7


@dataclass(frozen=True)
class ContactPatch:
    """Inclusive rectangular cell range on the 32x16 grid."""

    row_lo: int
    row_hi: int
    col_lo: int
    col_hi: int

    def __post_init__(self):
        if not (0 <= self.row_lo <= self.row_hi < MATRIX_ROWS):
            raise TrialValidationError(f"patch rows out of bounds: {self}")
        if not (0 <= self.col_lo <= self.col_hi < MATRIX_COLS):
            raise TrialValidationError(f"patch cols out of bounds: {self}")

    @property
    def n_cells(self) -> int:
        return (self.row_hi - self.row_lo + 1) * (self.col_hi - self.col_lo + 1)

    @property
    def percent(self) -> float:
        return self.n_cells / (MATRIX_ROWS * MATRIX_COLS)

    @property
    def centroid(self) -> float:
        return (self.row_lo + self.row_hi) / 2.0 / (MATRIX_ROWS - 1)


FULL_PATCH = ContactPatch(0, MATRIX_ROWS - 1, 0, MATRIX_COLS - 1)


@dataclass(frozen=True)
class SimConfig:
    device: DeviceProfile
    source_temp_f: float
    initial_device_f: float
    contact_patch: ContactPatch = FULL_PATCH
    duration_s: float = DEFAULT_DURATION_S
    frame_period_s: float = DEFAULT_FRAME_PERIOD_S
    seed: int = 0
    noise_sd_f: Optional[float] = None  # overrides every sensor's noise when set
    source_drift_amp_f: float = 0.0  # slow sinusoidal heater instability, off by default
    source_drift_period_s: float = 60.0

    def __post_init__(self):
        if self.source_temp_f <= self.initial_device_f:
            raise TrialValidationError(
                "source_temp_f must exceed initial_device_f (heating-only scope)"
            )
        if self.duration_s <= 0 or self.frame_period_s <= 0:
            raise TrialValidationError("duration_s and frame_period_s must be > 0")


def effective_k(sensor: SensorSpec, patch: ContactPatch) -> float:
    """Rate constant scaled by contact area and proximity to the sensor:
    base_k * percent * (1 - 0.5 * |patch centroid - sensor position|)."""
    return sensor.base_k * patch.percent * (1.0 - 0.5 * abs(patch.centroid - sensor.position))


def simulate_trial(config: SimConfig, trial_id: str = "trial", scenario: str = "single") -> TrialRecord:
    """Generate one trial: exponential warming per sensor plus capacitance
    frames; fully deterministic given the config seed."""
    rng = np.random.default_rng(config.seed)
    t0 = config.initial_device_f
    series = []
    for sensor in config.device.sensors:
        times = np.arange(0.0, config.duration_s + 1e-9, sensor.sample_period_s)
        k = effective_k(sensor, config.contact_patch)
        peak = config.source_temp_f + (
            config.source_drift_amp_f
            * np.sin(2.0 * math.pi * times / config.source_drift_period_s)
            if config.source_drift_amp_f > 0
            else 0.0
        )
        clean = (t0 - peak) * np.exp(-k * times) + peak
        sd = config.noise_sd_f if config.noise_sd_f is not None else sensor.noise_sd_f
        values = clean + (rng.normal(0.0, sd, times.size) if sd > 0 else 0.0)
        if sensor.quantization_f > 0:
            values = np.round(values / sensor.quantization_f) * sensor.quantization_f
        series.append(
            ThermistorSeries(
                sensor.sensor_id,
                tuple(ThermistorSample(float(t), float(v)) for t, v in zip(times, values)),
            )
        )

    frames = []
    if config.device.has_screen_matrix:
        p = config.contact_patch
        for t in np.arange(0.0, config.duration_s, config.frame_period_s):
            matrix = rng.integers(
                BACKGROUND_VALUE_LO, BACKGROUND_VALUE_HI + 1, (MATRIX_ROWS, MATRIX_COLS)
            )
            matrix[p.row_lo : p.row_hi + 1, p.col_lo : p.col_hi + 1] = rng.integers(
                PATCH_VALUE_LO,
                PATCH_VALUE_HI + 1,
                (p.row_hi - p.row_lo + 1, p.col_hi - p.col_lo + 1),
            )
            frames.append(
                CapacitanceFrame(float(t), tuple(tuple(int(v) for v in row) for row in matrix))
            )

    return TrialRecord(
        trial_id=trial_id,
        device=config.device,
        series=tuple(series),
        frames=tuple(frames),
        ground_truth_f=config.source_temp_f,
        duration_s=config.duration_s,
        metadata={
            "scenario": scenario,
            "sim_seed": str(config.seed),
            "patch": f"{config.contact_patch.row_lo},{config.contact_patch.row_hi},"
            f"{config.contact_patch.col_lo},{config.contact_patch.col_hi}",
        },
    )


def _trial_seed(seed: int, index: int) -> int:
    # Per-trial seed mixed from the batch seed so generation is order-independent.
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _apportion(n: int, weights: list[float]) -> list[int]:
    """Largest-remainder allocation of n slots across weights."""
    total = sum(weights)
    raw = [n * w / total for w in weights]
    counts = [int(r) for r in raw]
    remainders = sorted(
        range(len(weights)), key=lambda i: raw[i] - counts[i], reverse=True
    )
    for i in remainders[: n - sum(counts)]:
        counts[i] += 1
    return counts


def _lab_source_bands(n: int) -> list[tuple[float, float]]:
    # Width-proportional allocation with the boost band at double density,
    # split at the fever cutoff so both classes always appear.
    bands = [
        (LAB_SOURCE_LO_F, LAB_BOOST_LO_F),
        (LAB_BOOST_LO_F, 100.4),
        (100.4, LAB_BOOST_HI_F),
        (LAB_BOOST_HI_F, LAB_SOURCE_HI_F),
    ]
    weights = [
        LAB_BOOST_LO_F - LAB_SOURCE_LO_F,
        2.0 * (100.4 - LAB_BOOST_LO_F),
        2.0 * (LAB_BOOST_HI_F - 100.4),
        LAB_SOURCE_HI_F - LAB_BOOST_HI_F,
    ]
    counts = _apportion(n, weights)
    out = []
    for band, count in zip(bands, counts):
        out.extend([band] * count)
    return out


def _biased_patch(rng: np.random.Generator, top: bool, rows_lo: int, rows_hi: int) -> ContactPatch:
    """Full-width patch; top-biased patches start in the top third."""
    if top:
        r = int(rng.integers(rows_lo, min(rows_hi, MATRIX_ROWS - TOP_THIRD_ROW_LO) + 1))
        row_lo = int(rng.integers(TOP_THIRD_ROW_LO, MATRIX_ROWS - r + 1))
    else:
        r = int(rng.integers(rows_lo, rows_hi + 1))
        row_lo = int(rng.integers(0, MATRIX_ROWS - r + 1))
    return ContactPatch(row_lo, row_lo + r - 1, 0, MATRIX_COLS - 1)


def _simulate_dataset(
    n: int,
    seed: int,
    device: DeviceProfile,
    source_bands: list[tuple[float, float]],
    rows_lo: int,
    rows_hi: int,
    prefix: str,
    scenario: str,
) -> list[TrialRecord]:
    rng = np.random.default_rng(seed)
    bands = list(source_bands)
    rng.shuffle(bands)
    n_top = round(TOP_BIAS_FRACTION * n)
    top_flags = np.array([True] * n_top + [False] * (n - n_top))
    rng.shuffle(top_flags)
    trials = []
    for i in range(n):
        lo, hi = bands[i]
        config = SimConfig(
            device=device,
            source_temp_f=float(rng.uniform(lo, hi)),
            initial_device_f=float(rng.uniform(INITIAL_LO_F, INITIAL_HI_F)),
            contact_patch=_biased_patch(rng, bool(top_flags[i]), rows_lo, rows_hi),
            seed=_trial_seed(seed, i),
        )
        trials.append(
            simulate_trial(config, trial_id=f"{prefix}-{seed}-{i:03d}", scenario=scenario)
        )
    return trials


def simulate_lab_dataset(
    n: int = 51, seed: int = 0, device: Optional[DeviceProfile] = None
) -> list[TrialRecord]:
    """Lab-replica corpus: source temperatures in [95, 102.5] degF saturated
    around the 100.4 cutoff, initial device temps in [70, 83], contact
    percents in [0.30, 0.50] biased to the top third of the screen."""
    if n < 10:
        raise TrialValidationError(f"lab dataset needs n >= 10, got {n}")
    if device is None:
        device = default_profiles()["pixel4-like-phone"]
    # Full-width patches of 10..16 rows give percents 0.3125..0.5.
    return _simulate_dataset(
        n, seed, device, _lab_source_bands(n), 10, 16, "lab", "lab"
    )


def simulate_clinical_dataset(
    n: int = 7, seed: int = 0, device: Optional[DeviceProfile] = None
) -> list[TrialRecord]:
    """Clinical-style corpus: gentler contact (8-20% of the screen) and a
    mostly afebrile source range [97, 101] degF."""
    if n < 1:
        raise TrialValidationError(f"clinical dataset needs n >= 1, got {n}")
    if device is None:
        device = default_profiles()["pixel4-like-phone"]
    bands = [(CLINICAL_SOURCE_LO_F, CLINICAL_SOURCE_HI_F)] * n
    # Full-width patches of 3..6 rows give percents 0.094..0.188.
    return _simulate_dataset(n, seed, device, bands, 3, 6, "clinic", "clinical")
