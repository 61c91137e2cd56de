"""Linear and quadratic regression from features to core body temperature.

Features are standardized to zero mean / unit scale before the polynomial
basis is built; the constants live inside the fitted model so prediction is
self-contained. Predictions are clamped to the plausible human range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TrialParseError, TrialValidationError, UnderdeterminedError
from .thermal import FeatureVector

MODEL_VERSION = 1
N_FEATURES = 4
KINDS = ("linear", "quadratic")
TERM_COUNTS = {"linear": 5, "quadratic": 15}

# Fixed basis order for x = (slope, t0, centroid, percent):
#   linear:    [1, x1, x2, x3, x4]
#   quadratic: [1, x1, x2, x3, x4, x1^2, x2^2, x3^2, x4^2,
#               x1x2, x1x3, x1x4, x2x3, x2x4, x3x4]
TERM_ORDER = {
    "linear": ("1", "x1", "x2", "x3", "x4"),
    "quadratic": (
        "1", "x1", "x2", "x3", "x4",
        "x1^2", "x2^2", "x3^2", "x4^2",
        "x1*x2", "x1*x3", "x1*x4", "x2*x3", "x2*x4", "x3*x4",
    ),
}

PREDICT_MIN_F = 90.0
PREDICT_MAX_F = 110.0

MIN_SCALE = 1e-12
RIDGE_LAMBDA = 1e-8


@dataclass(frozen=True)
class FittedModel:
    kind: str
    coeffs: tuple[float, ...]
    feature_means: tuple[float, ...]
    feature_scales: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "feature_means", tuple(float(c) for c in self.feature_means))
        object.__setattr__(self, "feature_scales", tuple(float(c) for c in self.feature_scales))
        if self.kind not in KINDS:
            raise TrialValidationError(f"unknown model kind {self.kind!r}")
        if len(self.coeffs) != TERM_COUNTS[self.kind]:
            raise TrialValidationError(
                f"{self.kind} model needs {TERM_COUNTS[self.kind]} coefficients"
            )
        if len(self.feature_means) != N_FEATURES or len(self.feature_scales) != N_FEATURES:
            raise TrialValidationError(f"need {N_FEATURES} standardization constants")
        if any(s <= 0 for s in self.feature_scales):
            raise TrialValidationError("feature_scales must all be > 0")

    @property
    def term_order(self) -> tuple[str, ...]:
        return TERM_ORDER[self.kind]


def _as_features(f) -> np.ndarray:
    x = f.as_array() if isinstance(f, FeatureVector) else np.asarray(f, dtype=float)
    if x.shape != (N_FEATURES,):
        raise TrialValidationError(f"expected {N_FEATURES} features, got shape {x.shape}")
    return x


def design_row(f: FeatureVector | Sequence[float], kind: str) -> np.ndarray:
    """Polynomial basis row in the pinned term order."""
    if kind not in KINDS:
        raise TrialValidationError(f"unknown model kind {kind!r}")
    x = _as_features(f)
    row = [1.0, *x]
    if kind == "quadratic":
        row += [v * v for v in x]
        row += [x[i] * x[j] for i in range(N_FEATURES) for j in range(i + 1, N_FEATURES)]
    return np.array(row)


def fit(dataset: Sequence[tuple[FeatureVector, float]], kind: str) -> FittedModel:
    """Least-squares fit (QR/SVD via lstsq, ridge fallback when rank-deficient)."""
    if kind not in KINDS:
        raise TrialValidationError(f"unknown model kind {kind!r}")
    terms = TERM_COUNTS[kind]
    if len(dataset) < terms:
        raise UnderdeterminedError(
            f"{kind} regression needs >= {terms} examples, got {len(dataset)}"
        )
    X = np.array([_as_features(f) for f, _ in dataset])
    y = np.array([float(t) for _, t in dataset])
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise TrialValidationError("non-finite values in training data")

    means = X.mean(axis=0)
    scales = np.maximum(X.std(axis=0), MIN_SCALE)
    Z = (X - means) / scales
    D = np.array([design_row(z, kind) for z in Z])
    w, _, rank, _ = np.linalg.lstsq(D, y, rcond=None)
    if rank < terms:
        w = np.linalg.solve(D.T @ D + RIDGE_LAMBDA * np.eye(terms), D.T @ y)
    return FittedModel(
        kind=kind,
        coeffs=tuple(w),
        feature_means=tuple(means),
        feature_scales=tuple(scales),
    )


def predict(model: FittedModel, f: FeatureVector | Sequence[float]) -> float:
    """Estimated core body temperature in degF, clamped to [90, 110]."""
    x = _as_features(f)
    z = (x - np.array(model.feature_means)) / np.array(model.feature_scales)
    value = float(design_row(z, model.kind) @ np.array(model.coeffs))
    return min(max(value, PREDICT_MIN_F), PREDICT_MAX_F)


def save_model(model: FittedModel) -> str:
    doc = {
        "version": MODEL_VERSION,
        "kind": model.kind,
        "coeffs": list(model.coeffs),
        "feature_means": list(model.feature_means),
        "feature_scales": list(model.feature_scales),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_model(text: str | bytes) -> FittedModel:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TrialParseError(f"malformed model document: {e}") from e
    if doc.get("version") != MODEL_VERSION:
        raise TrialParseError(
            f"unsupported model version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    for key in ("kind", "coeffs", "feature_means", "feature_scales"):
        if key not in doc:
            raise TrialParseError(f"model document missing field {key!r}")
    return FittedModel(
        kind=doc["kind"],
        coeffs=tuple(doc["coeffs"]),
        feature_means=tuple(doc["feature_means"]),
        feature_scales=tuple(doc["feature_scales"]),
    )
