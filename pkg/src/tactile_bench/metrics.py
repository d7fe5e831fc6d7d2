"""Frame averaging, the per-pixel wear metric, and force-sensitivity curves.

The wear metric is the mean absolute error between a cycle's averaged image
and the first cycle's averaged image, taken per pixel per channel:

    (1 / (W*H*3)) * sum |I_cycle(i, j, c) - I_first(i, j, c)|

Accumulation runs in a fixed row-major order with compensated summation
(native backend), so results are bit-reproducible run to run and exact for
8-bit integer-valued frames.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .core import (
    AlignmentError,
    FrameStack,
    LoadSample,
    RESILIENCE_KINDS,
    RunManifest,
    ValidationError,
)

LOADING = "loading"
UNLOADING = "unloading"

# Moving-average width (samples) for the loading/unloading segmentation.
PHASE_SMOOTH_WINDOW = 5

# Least-squares window (newtons) for saturation detection.
SATURATION_WINDOW_N = 5.0


def average_frames(stack: FrameStack | np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel arithmetic mean of a stack, as float64."""
    frames = stack.frames if isinstance(stack, FrameStack) else np.asarray(stack)
    if frames.ndim != 4 or frames.shape[-1] != 3:
        raise ValidationError(
            f"average_frames: expected (n, h, w, 3) stack, got shape {frames.shape}"
        )
    if frames.shape[0] < 1:
        raise ValidationError("average_frames: empty stack")
    return kernels.stack_mean(frames)


def mae(current: np.ndarray, reference: np.ndarray) -> float:
    """Mean absolute per-pixel-per-channel difference between two frames.

    Symmetric in its arguments; 0 exactly when the frames are identical.
    """
    a = np.asarray(current)
    b = np.asarray(reference)
    if a.shape != b.shape:
        raise ValidationError(f"mae: dimension mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValidationError("mae: empty frames")
    return kernels.mean_abs_diff(a, b)


def _csv_num(x: float) -> str:
    if isinstance(x, float) and np.isnan(x):
        return ""
    return str(x)


@dataclass(frozen=True)
class MaeSeries:
    """Per-cycle wear MAE against cycle 1, unloaded and (optionally) loaded."""

    cycle_indices: tuple[int, ...]
    mae_unloaded: tuple[float, ...]
    mae_loaded: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.cycle_indices) != len(self.mae_unloaded):
            raise ValidationError("MaeSeries: index/value length mismatch")
        if self.mae_loaded is not None and len(self.mae_loaded) != len(self.cycle_indices):
            raise ValidationError("MaeSeries: loaded series length mismatch")
        if any(v < 0 for v in self.mae_unloaded):
            raise ValidationError("MaeSeries: negative MAE")

    def write_csv(self, path: str | Path) -> None:
        """Columns: cycle,mae_unloaded[,mae_loaded]; the loaded column is
        omitted entirely when the run recorded no loaded frames."""
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            if self.mae_loaded is None:
                writer.writerow(["cycle", "mae_unloaded"])
                for c, u in zip(self.cycle_indices, self.mae_unloaded):
                    writer.writerow([c, _csv_num(u)])
            else:
                writer.writerow(["cycle", "mae_unloaded", "mae_loaded"])
                for c, u, l in zip(self.cycle_indices, self.mae_unloaded, self.mae_loaded):
                    writer.writerow([c, _csv_num(u), _csv_num(l)])


def mae_series(run: RunManifest, jobs: int = 1) -> MaeSeries:
    """Wear MAE of every cycle's averaged image against cycle 1's.

    The unloaded series is always produced; the loaded series only when the
    protocol records loaded frames (i.e. not abrasion).
    """
    if run.protocol.kind not in RESILIENCE_KINDS:
        raise ValidationError(
            f"mae_series: {run.protocol.kind.value} is not a resilience protocol"
        )
    cycles = run.cycles
    assert cycles is not None
    has_loaded = cycles[0].loaded is not None
    ref_unloaded = average_frames(cycles[0].unloaded)
    ref_loaded = average_frames(cycles[0].loaded) if has_loaded else None

    def one(rec) -> tuple[float, float | None]:
        u = mae(average_frames(rec.unloaded), ref_unloaded)
        l = mae(average_frames(rec.loaded), ref_loaded) if has_loaded else None
        return u, l

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(one, cycles))
    else:
        values = [one(rec) for rec in cycles]

    return MaeSeries(
        cycle_indices=tuple(rec.cycle_index for rec in cycles),
        mae_unloaded=tuple(v[0] for v in values),
        mae_loaded=tuple(v[1] for v in values) if has_loaded else None,
    )


@dataclass(frozen=True)
class ForceCurve:
    """Per-frame wear MAE against the first frame, aligned to measured force."""

    t_s: tuple[float, ...]
    force_n: tuple[float, ...]
    mae: tuple[float, ...]
    phase: tuple[str, ...]

    def __post_init__(self) -> None:
        n = len(self.t_s)
        if not (len(self.force_n) == len(self.mae) == len(self.phase) == n):
            raise ValidationError("ForceCurve: column length mismatch")

    def loading_samples(self) -> tuple[np.ndarray, np.ndarray]:
        """(force, mae) arrays restricted to the loading phase."""
        sel = np.array([p == LOADING for p in self.phase])
        return (
            np.asarray(self.force_n, dtype=np.float64)[sel],
            np.asarray(self.mae, dtype=np.float64)[sel],
        )

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_s", "force_n", "phase", "mae"])
            for t, f, p, m in zip(self.t_s, self.force_n, self.phase, self.mae):
                writer.writerow([_csv_num(t), _csv_num(f), p, _csv_num(m)])


def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    if len(values) < 2 or window < 2:
        return values.astype(np.float64)
    pad = window // 2
    padded = np.pad(values.astype(np.float64), pad, mode="edge")
    kernel = np.ones(window) / window
    return np.convolve(padded, kernel, mode="valid")[: len(values)]


def _tag_phases(force: np.ndarray) -> tuple[str, ...]:
    # Sign of the smoothed derivative; zero derivative keeps the previous
    # segment, and the curve starts in the loading phase.
    smooth = _smooth(force, PHASE_SMOOTH_WINDOW)
    deriv = np.gradient(smooth) if len(smooth) > 1 else np.zeros_like(smooth)
    phases: list[str] = []
    current = LOADING
    for d in deriv:
        if d > 0:
            current = LOADING
        elif d < 0:
            current = UNLOADING
        phases.append(current)
    return tuple(phases)


def force_curve(frames: FrameStack, forces: Sequence[LoadSample]) -> ForceCurve:
    """Pair each frame with the measured normal force at its timestamp.

    Force values come from linear interpolation between the two bracketing
    log samples; frames outside the log's time span are dropped.  MAE is
    taken against the first frame of the stream.
    """
    if frames.timestamps_s is None:
        raise ValidationError("force_curve: frame stack has no timestamps")
    if not forces:
        raise ValidationError("force_curve: empty force log")
    t_log = np.array([s.timestamp_s for s in forces], dtype=np.float64)
    if len(t_log) > 1 and not np.all(np.diff(t_log) > 0):
        raise ValidationError("force_curve: force log timestamps are not sorted")
    fz = np.array([s.fz_n for s in forces], dtype=np.float64)

    t_frames = frames.timestamps_s
    keep = (t_frames >= t_log[0]) & (t_frames <= t_log[-1])
    if not keep.any():
        raise AlignmentError(
            f"force_curve: frame times [{t_frames[0]:.3f}, {t_frames[-1]:.3f}] s do not "
            f"overlap force log [{t_log[0]:.3f}, {t_log[-1]:.3f}] s"
        )
    t_used = t_frames[keep]
    force_at = np.interp(t_used, t_log, fz)

    reference = np.asarray(frames.frames[0], dtype=np.float64)
    indices = np.nonzero(keep)[0]
    maes = [mae(frames.frames[i], reference) for i in indices]

    return ForceCurve(
        t_s=tuple(float(t) for t in t_used),
        force_n=tuple(float(f) for f in force_at),
        mae=tuple(maes),
        phase=_tag_phases(force_at),
    )


def _ls_slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom == 0.0:
        return 0.0
    return float(np.dot(xc, y - y.mean()) / denom)


def saturation_force(curve: ForceCurve, ratio_threshold: float = 0.5) -> float | None:
    """Force beyond which the loading-phase MAE slope stays collapsed.

    Slides a 5 N least-squares window over the loading samples and finds
    the smallest window start from which every window's slope stays below
    ``ratio_threshold`` times the initial window's slope; reports that
    window's center.  The sustained condition keeps slope jitter on noisy
    curves from triggering a spurious detection.  Returns None for curves
    that never saturate (including flat all-zero curves, whose initial
    slope is 0).
    """
    force, value = curve.loading_samples()
    if len(force) < 10 or (force.max() - force.min()) < SATURATION_WINDOW_N:
        raise ValidationError(
            "saturation_force: need at least 10 loading samples spanning "
            f"{SATURATION_WINDOW_N:g} N, got {len(force)} over "
            f"{force.max() - force.min() if len(force) else 0.0:.3g} N"
        )
    order = np.argsort(force, kind="stable")
    force = force[order]
    value = value[order]

    starts: list[float] = []
    slopes: list[float] = []
    for start in force:
        sel = (force >= start) & (force <= start + SATURATION_WINDOW_N)
        if sel.sum() < 3 or force[sel].max() - force[sel].min() < SATURATION_WINDOW_N / 2:
            continue
        starts.append(float(start))
        slopes.append(_ls_slope(force[sel], value[sel]))
    if not slopes:
        return None
    initial = slopes[0]
    if initial <= 0:
        return None
    below = [s < ratio_threshold * initial for s in slopes]
    for i in range(1, len(slopes)):
        if all(below[i:]):
            return starts[i] + SATURATION_WINDOW_N / 2
    return None
