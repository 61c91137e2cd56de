"""Trial data model, canonical JSON serialization, and validation.

A trial is one device-against-body contact session: per-thermistor time
series, optional raw touchscreen capacitance frames, and metadata. All
temperatures are stored in degrees Fahrenheit; any Celsius display is a
presentation concern of the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .errors import TrialParseError, TrialValidationError

TEMP_MIN_F = 32.0
TEMP_MAX_F = 150.0
MATRIX_ROWS = 32
MATRIX_COLS = 16
MATRIX_CELLS = MATRIX_ROWS * MATRIX_COLS
FEVER_CUTOFF_F = 100.4

PROFILE_KINDS = ("phone", "watch")


@dataclass(frozen=True)
class ThermistorSample:
    """One thermistor reading: seconds since trial start and temperature in degF."""

    t_s: float
    temp_f: float

    def __post_init__(self):
        if self.t_s < 0:
            raise TrialValidationError(f"t_s must be non-negative, got {self.t_s}")
        if not (TEMP_MIN_F <= self.temp_f <= TEMP_MAX_F):
            raise TrialValidationError(
                f"temp_f {self.temp_f} outside sanity bounds [{TEMP_MIN_F}, {TEMP_MAX_F}]"
            )


@dataclass(frozen=True)
class ThermistorSeries:
    sensor_id: str
    samples: tuple[ThermistorSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.sensor_id:
            raise TrialValidationError("sensor_id must be non-empty")
        if len(self.samples) < 1:
            raise TrialValidationError(f"series {self.sensor_id!r} has no samples")
        for a, b in zip(self.samples, self.samples[1:]):
            if b.t_s <= a.t_s:
                raise TrialValidationError(
                    f"series {self.sensor_id!r}: t_s not strictly increasing at t={b.t_s}"
                )

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(s.t_s for s in self.samples)

    @property
    def temps(self) -> tuple[float, ...]:
        return tuple(s.temp_f for s in self.samples)


@dataclass(frozen=True)
class CapacitanceFrame:
    """One 32x16 raw capacitance snapshot; row 0 = bottom (microphone end)."""

    t_s: float
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(row) for row in self.matrix))
        if self.t_s < 0:
            raise TrialValidationError(f"frame t_s must be non-negative, got {self.t_s}")
        if len(self.matrix) != MATRIX_ROWS or any(len(r) != MATRIX_COLS for r in self.matrix):
            raise TrialValidationError(
                f"matrix dimensions must be {MATRIX_ROWS}x{MATRIX_COLS}"
            )
        for row in self.matrix:
            for v in row:
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise TrialValidationError(
                        f"matrix cells must be non-negative integers, got {v!r}"
                    )


@dataclass(frozen=True)
class SensorSpec:
    """Per-thermistor description used by the simulator and feature pipeline."""

    sensor_id: str
    sample_period_s: float
    noise_sd_f: float
    quantization_f: float
    position: float  # normalized major-axis location, 0 = bottom, 1 = top
    base_k: float  # heat-transfer rate constant at full, co-located contact (1/s)

    def __post_init__(self):
        if not self.sensor_id:
            raise TrialValidationError("sensor_id must be non-empty")
        if self.sample_period_s <= 0:
            raise TrialValidationError(f"sample_period_s must be > 0 ({self.sensor_id})")
        if self.noise_sd_f < 0 or self.quantization_f < 0:
            raise TrialValidationError(f"noise/quantization must be >= 0 ({self.sensor_id})")
        if not (0.0 <= self.position <= 1.0):
            raise TrialValidationError(f"position must be in [0, 1] ({self.sensor_id})")
        if self.base_k <= 0:
            raise TrialValidationError(f"base_k must be > 0 ({self.sensor_id})")


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    kind: str  # "phone" or "watch"
    sensors: tuple[SensorSpec, ...]
    has_screen_matrix: bool

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.kind not in PROFILE_KINDS:
            raise TrialValidationError(f"unknown device kind {self.kind!r}")
        ids = [s.sensor_id for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise TrialValidationError(f"duplicate sensor ids in profile {self.name!r}")
        if self.kind == "watch":
            if self.has_screen_matrix:
                raise TrialValidationError("watch profiles cannot expose a screen matrix")
            if ids != ["battery"]:
                raise TrialValidationError(
                    "watch profiles must have exactly one sensor named 'battery'"
                )

    def sensor(self, sensor_id: str) -> SensorSpec:
        for s in self.sensors:
            if s.sensor_id == sensor_id:
                return s
        raise TrialValidationError(f"profile {self.name!r} has no sensor {sensor_id!r}")

    @property
    def sensor_ids(self) -> frozenset[str]:
        return frozenset(s.sensor_id for s in self.sensors)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: str
    device: DeviceProfile
    series: tuple[ThermistorSeries, ...]
    frames: tuple[CapacitanceFrame, ...]
    ground_truth_f: Optional[float]
    duration_s: float
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.duration_s <= 0:
            raise TrialValidationError(f"duration_s must be > 0, got {self.duration_s}")
        ids = [s.sensor_id for s in self.series]
        if len(set(ids)) != len(ids):
            raise TrialValidationError(f"trial {self.trial_id!r}: duplicate sensor ids")
        unknown = set(ids) - self.device.sensor_ids
        if unknown:
            raise TrialValidationError(
                f"trial {self.trial_id!r}: sensors {sorted(unknown)} not in profile "
                f"{self.device.name!r}"
            )
        for s in self.series:
            if s.samples[-1].t_s > self.duration_s:
                raise TrialValidationError(
                    f"trial {self.trial_id!r}: sample t_s beyond duration in {s.sensor_id!r}"
                )
        for f in self.frames:
            if f.t_s > self.duration_s:
                raise TrialValidationError(
                    f"trial {self.trial_id!r}: frame t_s beyond duration"
                )

    def get_series(self, sensor_id: str) -> ThermistorSeries:
        for s in self.series:
            if s.sensor_id == sensor_id:
                return s
        raise KeyError(sensor_id)


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    n_febrile: int
    temp_range_f: tuple[float, float]
    sensors_common: frozenset[str]


# ---------------------------------------------------------------------------
# Parsing and canonical serialization
# ---------------------------------------------------------------------------


def _require(doc: dict, key: str, ctx: str):
    if key not in doc:
        raise TrialParseError(f"{ctx}: missing field {key!r}")
    return doc[key]


def parse_trial(text: str | bytes, profiles: Mapping[str, DeviceProfile]) -> TrialRecord:
    """Parse one trial document; raises TrialParseError / TrialValidationError."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TrialParseError(f"malformed trial document: {e}") from e
    if not isinstance(doc, dict):
        raise TrialParseError("trial document must be a JSON object")

    trial_id = _require(doc, "trial_id", "trial")
    device_name = _require(doc, "device", trial_id)
    if device_name not in profiles:
        raise TrialValidationError(f"trial {trial_id!r}: unknown device {device_name!r}")

    series = []
    for i, sdoc in enumerate(_require(doc, "series", trial_id)):
        ctx = f"trial {trial_id!r} series[{i}]"
        samples = []
        for pair in _require(sdoc, "samples", ctx):
            if not isinstance(pair, list) or len(pair) != 2:
                raise TrialParseError(f"{ctx}: samples must be [t_s, temp_f] pairs")
            samples.append(ThermistorSample(float(pair[0]), float(pair[1])))
        series.append(ThermistorSeries(_require(sdoc, "sensor_id", ctx), tuple(samples)))

    frames = []
    for i, fdoc in enumerate(doc.get("frames", [])):
        ctx = f"trial {trial_id!r} frames[{i}]"
        frames.append(
            CapacitanceFrame(float(_require(fdoc, "t_s", ctx)), _require(fdoc, "matrix", ctx))
        )

    truth = doc.get("ground_truth_f")
    return TrialRecord(
        trial_id=trial_id,
        device=profiles[device_name],
        series=tuple(series),
        frames=tuple(frames),
        ground_truth_f=None if truth is None else float(truth),
        duration_s=float(_require(doc, "duration_s", trial_id)),
        metadata={str(k): str(v) for k, v in doc.get("metadata", {}).items()},
    )


def write_trial(trial: TrialRecord) -> str:
    """Canonical serialization: fixed key order, shortest round-trip floats.

    write(parse(x)) is byte-identical to write(x).
    """
    doc = {
        "trial_id": trial.trial_id,
        "device": trial.device.name,
        "duration_s": float(trial.duration_s),
        "ground_truth_f": trial.ground_truth_f,
        "metadata": {k: trial.metadata[k] for k in sorted(trial.metadata)},
        "series": [
            {
                "sensor_id": s.sensor_id,
                "samples": [[float(p.t_s), float(p.temp_f)] for p in s.samples],
            }
            for s in trial.series
        ],
        "frames": [
            {"t_s": float(f.t_s), "matrix": [list(row) for row in f.matrix]}
            for f in trial.frames
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def parse_profiles(text: str | bytes) -> dict[str, DeviceProfile]:
    """Parse a profile library document keyed by profile name."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TrialParseError(f"malformed profile document: {e}") from e
    profiles = {}
    for name, pdoc in doc.items():
        sensors = tuple(
            SensorSpec(
                sensor_id=_require(sd, "sensor_id", name),
                sample_period_s=float(_require(sd, "sample_period_s", name)),
                noise_sd_f=float(_require(sd, "noise_sd_f", name)),
                quantization_f=float(_require(sd, "quantization_f", name)),
                position=float(_require(sd, "position", name)),
                base_k=float(_require(sd, "base_k", name)),
            )
            for sd in _require(pdoc, "sensors", name)
        )
        profiles[name] = DeviceProfile(
            name=name,
            kind=_require(pdoc, "kind", name),
            sensors=sensors,
            has_screen_matrix=bool(_require(pdoc, "has_screen_matrix", name)),
        )
    return profiles


def write_profiles(profiles: Mapping[str, DeviceProfile]) -> str:
    doc = {
        name: {
            "kind": p.kind,
            "has_screen_matrix": p.has_screen_matrix,
            "sensors": [
                {
                    "sensor_id": s.sensor_id,
                    "sample_period_s": float(s.sample_period_s),
                    "noise_sd_f": float(s.noise_sd_f),
                    "quantization_f": float(s.quantization_f),
                    "position": float(s.position),
                    "base_k": float(s.base_k),
                }
                for s in p.sensors
            ],
        }
        for name, p in sorted(profiles.items())
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def default_profiles() -> dict[str, DeviceProfile]:
    """Profile library shipped with the package."""
    text = resources.files(__package__).joinpath("profiles.json").read_text("utf-8")
    return parse_profiles(text)


# ---------------------------------------------------------------------------
# Dataset handling
# ---------------------------------------------------------------------------


def validate_dataset(trials: list[TrialRecord]) -> DatasetSummary:
    """Summarize a labeled dataset; every trial must carry ground truth."""
    if not trials:
        raise TrialValidationError("dataset is empty")
    for t in trials:
        if t.ground_truth_f is None:
            raise TrialValidationError(f"trial {t.trial_id!r} missing ground truth")
    truths = [t.ground_truth_f for t in trials]
    common = frozenset(trials[0].device.sensor_ids)
    for t in trials[1:]:
        common &= t.device.sensor_ids
    return DatasetSummary(
        n=len(trials),
        n_febrile=sum(1 for v in truths if v >= FEVER_CUTOFF_F),
        temp_range_f=(min(truths), max(truths)),
        sensors_common=common,
    )


def write_dataset(trials: list[TrialRecord], out_dir: str | Path) -> Path:
    """Write one file per trial plus a manifest with a profile snapshot."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    profiles: dict[str, DeviceProfile] = {}
    for t in trials:
        fname = f"{t.trial_id}.json"
        (out_dir / fname).write_text(write_trial(t), encoding="utf-8")
        names.append(fname)
        profiles[t.device.name] = t.device
    manifest = {
        "profiles": json.loads(write_profiles(profiles)),
        "trials": names,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", "utf-8")
    return path


def load_dataset(dataset_dir: str | Path) -> list[TrialRecord]:
    """Load every trial listed in a dataset directory's manifest."""
    dataset_dir = Path(dataset_dir)
    manifest_path = dataset_dir / "manifest.json"
    if not manifest_path.exists():
        raise TrialParseError(f"no manifest.json in {dataset_dir}")
    manifest = json.loads(manifest_path.read_text("utf-8"))
    profiles = parse_profiles(json.dumps(manifest["profiles"]))
    return [
        parse_trial((dataset_dir / name).read_text("utf-8"), profiles)
        for name in manifest["trials"]
    ]
