"""Touch-contact features from raw capacitance frames.

Contact is detected on the trial-averaged 32x16 matrix: cells strictly above
tau = 0.25 * C_max are "in contact". The two derived features are the
fraction of the screen in contact and the mask's center of mass along the
major axis (row 0 = bottom, row 31 = top).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NoContactError, TrialValidationError
from .trialdata import MATRIX_CELLS, MATRIX_COLS, MATRIX_ROWS, CapacitanceFrame

TAU_FRACTION = 0.25


@dataclass(frozen=True)
class ContactStats:
    percent: float  # mask_size / 512
    centroid: Optional[float]  # None when nothing is in contact
    mask_size: int
    c_max: float
    tau: float


def average_frames(frames: Sequence[CapacitanceFrame]) -> np.ndarray:
    """Cell-wise arithmetic mean over all frames of a trial."""
    if not frames:
        raise TrialValidationError("cannot average an empty frame list")
    stack = np.array([f.matrix for f in frames], dtype=float)
    if stack.shape[1:] != (MATRIX_ROWS, MATRIX_COLS):
        raise TrialValidationError(
            f"matrix dimensions must be {MATRIX_ROWS}x{MATRIX_COLS}"
        )
    return stack.mean(axis=0)


def _check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid)
    if grid.shape != (MATRIX_ROWS, MATRIX_COLS):
        raise TrialValidationError(
            f"matrix dimensions must be {MATRIX_ROWS}x{MATRIX_COLS}, got {grid.shape}"
        )
    return grid


def contact_mask(avg: np.ndarray) -> np.ndarray:
    """Boolean in-contact mask: value > 0.25 * C_max (strict, so an all-zero
    grid yields no contact rather than full contact)."""
    avg = _check_grid(avg)
    tau = TAU_FRACTION * float(avg.max())
    return avg > tau


def contact_percent(mask: np.ndarray) -> float:
    mask = _check_grid(mask)
    return int(mask.sum()) / MATRIX_CELLS


def contact_centroid(mask: np.ndarray) -> float:
    """Mean in-mask row index normalized by 31: 0 = bottom row, 1 = top row."""
    mask = _check_grid(mask)
    rows = np.nonzero(mask)[0]
    if rows.size == 0:
        raise NoContactError("contact mask is empty")
    return float(rows.mean() / (MATRIX_ROWS - 1))


def contact_stats(frames: Sequence[CapacitanceFrame]) -> ContactStats:
    """Full contact analysis for one trial's frames."""
    avg = average_frames(frames)
    c_max = float(avg.max())
    mask = contact_mask(avg)
    size = int(mask.sum())
    return ContactStats(
        percent=size / MATRIX_CELLS,
        centroid=contact_centroid(mask) if size else None,
        mask_size=size,
        c_max=c_max,
        tau=TAU_FRACTION * c_max,
    )
