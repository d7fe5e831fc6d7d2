"""Shared data model for tactile sensor benchmark runs.

A frame is a plain numpy array of shape ``(height, width, 3)``: uint8 as
recorded by the 8-bit sensor camera, float64 once any arithmetic (averaging,
background subtraction) has touched it.  Pixel values are never clamped in
memory; quantization to 8-bit happens only when frames are written to disk.

Everything above the frame level is an immutable dataclass, so loaded runs
can be shared freely across threads and analysis passes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class TactileBenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TactileBenchError):
    """Invalid argument, inconsistent data, or violated invariant."""


class ManifestError(ValidationError):
    """A run directory or manifest file that cannot be understood."""


class AlignmentError(ValidationError):
    """Frame and force streams that do not overlap in time."""


class ConfigError(ValidationError):
    """Pipeline configuration incompatible with the data it is applied to."""


def ensure_frame(arr: Any, name: str = "frame") -> np.ndarray:
    """Validate that ``arr`` is a single RGB frame and return it as an array."""
    a = np.asarray(arr)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValidationError(f"{name}: expected shape (h, w, 3), got {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"{name}: degenerate image of shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class FrameStack:
    """An ordered stack of same-sized RGB frames.

    ``frames`` has shape ``(n, height, width, 3)``.  The constructor takes
    ownership of the array and marks it read-only.  ``timestamps_s`` is
    optional per-frame capture time (seconds since run start), required for
    force-sensitivity streams.
    """

    frames: np.ndarray
    nominal_fps: float = 30.0
    timestamps_s: np.ndarray | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.frames)
        if arr.ndim != 4 or arr.shape[-1] != 3:
            raise ValidationError(
                f"FrameStack: expected shape (n, h, w, 3), got {arr.shape}"
            )
        if arr.shape[0] < 1:
            raise ValidationError("FrameStack: at least one frame required")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValidationError(f"FrameStack: degenerate frames of shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)
        if not self.nominal_fps > 0:
            raise ValidationError(f"FrameStack: nominal_fps must be > 0, got {self.nominal_fps}")
        if self.timestamps_s is not None:
            ts = np.ascontiguousarray(self.timestamps_s, dtype=np.float64)
            if ts.shape != (arr.shape[0],):
                raise ValidationError(
                    f"FrameStack: {ts.shape[0] if ts.ndim == 1 else ts.shape} timestamps for {arr.shape[0]} frames"
                )
            if ts.shape[0] > 1 and not np.all(np.diff(ts) > 0):
                raise ValidationError("FrameStack: timestamps must be strictly increasing")
            ts.setflags(write=False)
            object.__setattr__(self, "timestamps_s", ts)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def resolution(self) -> tuple[int, int]:
        """(width, height), matching the manifest convention."""
        return (self.width, self.height)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameStack):
            return NotImplemented
        if self.nominal_fps != other.nominal_fps:
            return False
        if (self.timestamps_s is None) != (other.timestamps_s is None):
            return False
        if self.timestamps_s is not None and not np.array_equal(
            self.timestamps_s, other.timestamps_s
        ):
            return False
        return np.array_equal(self.frames, other.frames)


ORIENTATIONS = ("horizontal", "vertical")


@dataclass(frozen=True)
class RidgeSpec:
    """Geometry of a periodic test surface.

    ``orientation`` is the direction of the ridge lines in the image;
    ``amplitude_mm == 0`` denotes the flat surface used as the noise floor.
    """

    period_mm: float
    amplitude_mm: float
    orientation: str = "vertical"

    def __post_init__(self) -> None:
        if not self.period_mm > 0:
            raise ValidationError(f"RidgeSpec: period_mm must be > 0, got {self.period_mm}")
        if self.amplitude_mm < 0:
            raise ValidationError(f"RidgeSpec: amplitude_mm must be >= 0, got {self.amplitude_mm}")
        if self.orientation not in ORIENTATIONS:
            raise ValidationError(
                f"RidgeSpec: orientation must be one of {ORIENTATIONS}, got {self.orientation!r}"
            )

    @property
    def is_flat(self) -> bool:
        return self.amplitude_mm == 0.0

    @property
    def frequency_cyc_per_mm(self) -> float:
        return 1.0 / self.period_mm


@dataclass(frozen=True)
class LoadSample:
    """One force-torque reading: normal force fz plus lateral fx, fy."""

    timestamp_s: float
    fz_n: float
    fx_n: float = 0.0
    fy_n: float = 0.0


class ProtocolKind(str, enum.Enum):
    CYCLIC_COMPRESSION = "cyclic_compression"
    CYCLIC_LOCAL_SHEAR = "cyclic_local_shear"
    CYCLIC_TRANSVERSE_SHEAR = "cyclic_transverse_shear"
    ABRASION = "abrasion"
    FORCE_SENSITIVITY = "force_sensitivity"
    SPATIAL_SENSITIVITY = "spatial_sensitivity"


RESILIENCE_KINDS = frozenset(
    {
        ProtocolKind.CYCLIC_COMPRESSION,
        ProtocolKind.CYCLIC_LOCAL_SHEAR,
        ProtocolKind.CYCLIC_TRANSVERSE_SHEAR,
        ProtocolKind.ABRASION,
    }
)


def _canon(value: Any) -> Any:
    """Normalize a parameter tree to JSON-native types (tuples become lists,
    numpy scalars become Python numbers) so equality survives a round trip."""
    if isinstance(value, dict):
        return {str(k): _canon(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if hasattr(value, "item"):
        return value.item()
    raise ValidationError(f"parameter value {value!r} is not JSON-representable")


@dataclass(frozen=True)
class Protocol:
    """A protocol kind plus its concrete parameter record."""

    kind: ProtocolKind
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        object.__setattr__(self, "params", _canon(dict(self.params)))

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


# Built-in presets.  Load levels, cycle counts, the abrasion schedule, the
# ramp limit/rate, and the sweep ranges are the published benchmark
# constants; resolutions and per-cycle frame counts follow the recording
# setup they were defined with.
PRESET_PARAMS: dict[ProtocolKind, dict[str, Any]] = {
    ProtocolKind.CYCLIC_COMPRESSION: {
        "normal_load_n": 15.0,
        "cycles": 1000,
        "tip_diameter_mm": 4.0,
        "frames_per_stack": 10,
        "fps": 30.0,
        "resolution": [320, 240],
    },
    ProtocolKind.CYCLIC_LOCAL_SHEAR: {
        "normal_load_n": 10.0,
        "lateral_load_n": 5.0,
        "cycles": 1000,
        "tip_diameter_mm": 4.0,
        "frames_per_stack": 10,
        "fps": 30.0,
        "resolution": [320, 240],
    },
    ProtocolKind.CYCLIC_TRANSVERSE_SHEAR: {
        "normal_load_n": 15.0,
        "lateral_load_n": 15.0,
        "cycles": 1000,
        "frames_per_stack": 10,
        "fps": 30.0,
        "resolution": [320, 240],
    },
    ProtocolKind.ABRASION: {
        "normal_load_n": 5.0,
        "total_distance_m": 8.0,
        "increment_m": 2.0,
        "distance_schedule_m": [2.0, 4.0, 6.0, 8.0],
        "frames_per_stack": 10,
        "fps": 30.0,
        "resolution": [320, 240],
    },
    ProtocolKind.FORCE_SENSITIVITY: {
        "max_force_n": 40.0,
        "ramp_rate_m_per_s": 2e-6,
        "tip_diameter_mm": 4.0,
        "fps": 30.0,
        "resolution": [320, 240],
    },
    ProtocolKind.SPATIAL_SENSITIVITY: {
        "loads_n": [2.0, 10.0],
        "amplitude_range_mm": [0.005, 0.05],
        "period_range_mm": [0.6, 1.5],
        "sweep_points": 10,
        "constant_period_mm": 1.5,
        "constant_amplitude_mm": 0.05,
        "frames_per_stack": 500,
        "fps": 30.0,
        "resolution": [640, 480],
    },
}


def preset_protocol(kind: ProtocolKind | str) -> Protocol:
    """Return a fresh Protocol carrying the built-in preset parameters."""
    kind = ProtocolKind(kind)
    return Protocol(kind=kind, params=dict(PRESET_PARAMS[kind]))


@dataclass(frozen=True, eq=False)
class CycleRecord:
    """Frames recorded at one cycle of a resilience protocol.

    ``loaded`` is absent for abrasion increments, present for every other
    resilience kind.
    """

    cycle_index: int
    unloaded: FrameStack
    loaded: FrameStack | None = None

    def __post_init__(self) -> None:
        if self.cycle_index < 1:
            raise ValidationError(
                f"CycleRecord: cycle_index is 1-based, got {self.cycle_index}"
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CycleRecord):
            return NotImplemented
        return (
            self.cycle_index == other.cycle_index
            and self.unloaded == other.unloaded
            and self.loaded == other.loaded
        )


@dataclass(frozen=True, eq=False)
class RunManifest:
    """One recorded benchmark run.

    Exactly one payload family is populated, depending on the protocol:
    ``cycles`` for resilience kinds, ``frames``+``forces`` for force
    sensitivity, and ``ridge``/``load_n``/``loaded``/``unloaded`` for a
    single spatial-sensitivity surface.  ``truth`` carries the simulator's
    ground-truth sidecar when the run is synthetic; ``source`` is the
    directory the run was loaded from (provenance only, excluded from
    equality).
    """

    protocol: Protocol
    material_label: str = ""
    sample_id: str = ""
    mm_per_pixel: float | None = None
    resolution: tuple[int, int] = (0, 0)
    fps: float = 30.0
    cycles: tuple[CycleRecord, ...] | None = None
    frames: FrameStack | None = None
    forces: tuple[LoadSample, ...] | None = None
    ridge: RidgeSpec | None = None
    load_n: float | None = None
    loaded: FrameStack | None = None
    unloaded: FrameStack | None = None
    truth: dict[str, Any] | None = None
    source: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        if self.cycles is not None:
            object.__setattr__(self, "cycles", tuple(self.cycles))
        if self.forces is not None:
            object.__setattr__(self, "forces", tuple(self.forces))
        self._validate()

    # -- validation ------------------------------------------------------

    def _validate(self) -> None:
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ValidationError(f"RunManifest: bad resolution {self.resolution}")
        if self.mm_per_pixel is not None and not self.mm_per_pixel > 0:
            raise ValidationError(
                f"RunManifest: mm_per_pixel must be > 0, got {self.mm_per_pixel}"
            )
        kind = self.protocol.kind
        if kind in RESILIENCE_KINDS:
            self._validate_resilience()
        elif kind is ProtocolKind.FORCE_SENSITIVITY:
            self._validate_force()
        else:
            self._validate_spatial()

    def _check_stack_resolution(self, stack: FrameStack, what: str) -> None:
        if stack.resolution != self.resolution:
            raise ValidationError(
                f"RunManifest: {what} has resolution {stack.resolution}, "
                f"manifest says {self.resolution}"
            )

    def _validate_resilience(self) -> None:
        if not self.cycles:
            raise ValidationError("RunManifest: resilience run needs at least one cycle")
        if self.frames is not None or self.loaded is not None or self.unloaded is not None:
            raise ValidationError("RunManifest: resilience run carries only cycle records")
        expects_loaded = self.protocol.kind is not ProtocolKind.ABRASION
        for pos, rec in enumerate(self.cycles, start=1):
            if rec.cycle_index != pos:
                raise ValidationError(
                    f"RunManifest: cycle at position {pos} has index {rec.cycle_index}; "
                    "indices must be contiguous from 1"
                )
            self._check_stack_resolution(rec.unloaded, f"cycle {pos} unloaded stack")
            if expects_loaded and rec.loaded is None:
                raise ValidationError(
                    f"RunManifest: cycle {pos} is missing its loaded stack "
                    f"({self.protocol.kind.value} records both)"
                )
            if not expects_loaded and rec.loaded is not None:
                raise ValidationError(
                    f"RunManifest: cycle {pos} carries a loaded stack but abrasion "
                    "records only unloaded frames"
                )
            if rec.loaded is not None:
                self._check_stack_resolution(rec.loaded, f"cycle {pos} loaded stack")

    def _validate_force(self) -> None:
        if self.frames is None or not self.forces:
            raise ValidationError(
                "RunManifest: force-sensitivity run needs a frame stream and a force log"
            )
        if self.frames.timestamps_s is None:
            raise ValidationError("RunManifest: force-sensitivity frames need timestamps")
        self._check_stack_resolution(self.frames, "frame stream")
        ts = [s.timestamp_s for s in self.forces]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("RunManifest: force log timestamps must be strictly increasing")

    def _validate_spatial(self) -> None:
        if self.ridge is None or self.load_n is None:
            raise ValidationError(
                "RunManifest: spatial run needs a ridge spec and a load level"
            )
        if self.loaded is None or self.unloaded is None:
            raise ValidationError(
                "RunManifest: spatial run needs loaded and unloaded stacks"
            )
        if self.mm_per_pixel is None:
            raise ValidationError(
                "RunManifest: mm_per_pixel is required for spatial_sensitivity runs"
            )
        self._check_stack_resolution(self.loaded, "loaded stack")
        self._check_stack_resolution(self.unloaded, "unloaded stack")

    # -- equality --------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunManifest):
            return NotImplemented
        return (
            self.protocol == other.protocol
            and self.material_label == other.material_label
            and self.sample_id == other.sample_id
            and self.mm_per_pixel == other.mm_per_pixel
            and self.resolution == other.resolution
            and self.fps == other.fps
            and self.cycles == other.cycles
            and self.frames == other.frames
            and self.forces == other.forces
            and self.ridge == other.ridge
            and self.load_n == other.load_n
            and self.loaded == other.loaded
            and self.unloaded == other.unloaded
            and self.truth == other.truth
        )
