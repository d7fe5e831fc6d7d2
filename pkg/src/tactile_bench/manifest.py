"""Run-directory persistence.

A run is a directory with a ``manifest.json`` plus the frame files it
references:

    manifest.json
    truth.json                         (optional simulator ground truth)
    cycles/0001/unloaded/frame_000.png (resilience protocols)
    cycles/0001/loaded/frame_000.png
    frames/frame_000.png + forces.csv  (force sensitivity)
    loaded/frame_000.png, unloaded/... (one spatial surface)

Frames are 8-bit RGB PNGs; save quantizes real-valued pixels at export
(round half to even, clipped to [0, 255]), so save/load round-trips
bit-exactly for integer-valued frames.  manifest.json is written with
sorted keys, making equal runs byte-identical on disk.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .core import (
    CycleRecord,
    FrameStack,
    LoadSample,
    ManifestError,
    Protocol,
    ProtocolKind,
    RESILIENCE_KINDS,
    RidgeSpec,
    RunManifest,
    ValidationError,
)

SCHEMA_VERSION = 1

FORCES_HEADER = ["timestamp_s", "fx_n", "fy_n", "fz_n"]


def quantize_u8(frame: np.ndarray) -> np.ndarray:
    """8-bit export quantization: round half to even, clip to [0, 255]."""
    arr = np.asarray(frame)
    if arr.dtype == np.uint8:
        return arr
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def _write_png(path: Path, frame: np.ndarray) -> None:
    Image.fromarray(quantize_u8(frame), mode="RGB").save(path, format="PNG")


def _read_png(path: Path, context: str) -> np.ndarray:
    if not path.is_file():
        raise ManifestError(f"{context}: missing frame file {path}")
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def _frame_name(i: int) -> str:
    return f"frame_{i:03d}.png"


def _cycle_dir(root: Path, index: int) -> Path:
    return root / "cycles" / f"{index:04d}"


def _write_stack(stack: FrameStack, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(stack.n_frames):
        _write_png(directory / _frame_name(i), stack.frames[i])


def _read_stack(
    directory: Path,
    n_frames: int,
    resolution: tuple[int, int],
    fps: float,
    context: str,
    timestamps: np.ndarray | None = None,
) -> FrameStack:
    w, h = resolution
    frames = np.empty((n_frames, h, w, 3), dtype=np.uint8)
    for i in range(n_frames):
        p = directory / _frame_name(i)
        arr = _read_png(p, context)
        if arr.shape[0] != h or arr.shape[1] != w:
            raise ManifestError(
                f"{context}: {p.name} is {arr.shape[1]}x{arr.shape[0]}, "
                f"manifest says {w}x{h}"
            )
        frames[i] = arr
    return FrameStack(frames, nominal_fps=fps, timestamps_s=timestamps)


def _json_dump(doc: dict[str, Any], path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _req(doc: dict[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in doc:
        raise ManifestError(f"{where}: missing field '{key}'")
    val = doc[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise ManifestError(
            f"{where}: field '{key}' should be {kind.__name__}, got {type(val).__name__}"
        )
    return val


def _uniform_stack_size(stacks: list[FrameStack], what: str) -> int:
    sizes = {s.n_frames for s in stacks}
    if len(sizes) != 1:
        raise ValidationError(
            f"save_manifest: {what} stacks vary in frame count ({sorted(sizes)}); "
            "the on-disk layout requires a uniform count"
        )
    return sizes.pop()


# -- save ----------------------------------------------------------------


def save_manifest(run: RunManifest, path: str | Path) -> None:
    """Write ``run`` to ``path`` so load_manifest reads back an equal run.

    Creates the directory (and parents) if needed.  Frames quantize to
    8-bit at export; integer-valued runs round-trip bit-exactly.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "protocol": run.protocol.kind.value,
        "parameters": run.protocol.params,
        "material_label": run.material_label,
        "sample_id": run.sample_id,
        "mm_per_pixel": run.mm_per_pixel,
        "resolution": {"w": run.resolution[0], "h": run.resolution[1]},
        "fps": run.fps,
    }

    kind = run.protocol.kind
    if kind in RESILIENCE_KINDS:
        assert run.cycles is not None
        unloaded_n = _uniform_stack_size([c.unloaded for c in run.cycles], "unloaded")
        loaded_stacks = [c.loaded for c in run.cycles if c.loaded is not None]
        loaded_n = _uniform_stack_size(loaded_stacks, "loaded") if loaded_stacks else 0
        doc["layout"] = {
            "kind": "cycles",
            "cycle_count": len(run.cycles),
            "unloaded_frames": unloaded_n,
            "loaded_frames": loaded_n,
        }
        for rec in run.cycles:
            cdir = _cycle_dir(root, rec.cycle_index)
            _write_stack(rec.unloaded, cdir / "unloaded")
            if rec.loaded is not None:
                _write_stack(rec.loaded, cdir / "loaded")
    elif kind is ProtocolKind.FORCE_SENSITIVITY:
        assert run.frames is not None and run.forces is not None
        doc["layout"] = {
            "kind": "streams",
            "frame_count": run.frames.n_frames,
            "timestamps_s": [float(t) for t in run.frames.timestamps_s],
        }
        _write_stack(run.frames, root / "frames")
        with (root / "forces.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FORCES_HEADER)
            for s in run.forces:
                writer.writerow([s.timestamp_s, s.fx_n, s.fy_n, s.fz_n])
    else:
        assert run.ridge is not None and run.loaded is not None and run.unloaded is not None
        doc["layout"] = {
            "kind": "surface",
            "ridge": {
                "period_mm": run.ridge.period_mm,
                "amplitude_mm": run.ridge.amplitude_mm,
                "orientation": run.ridge.orientation,
            },
            "load_n": run.load_n,
            "loaded_frames": run.loaded.n_frames,
            "unloaded_frames": run.unloaded.n_frames,
        }
        _write_stack(run.loaded, root / "loaded")
        _write_stack(run.unloaded, root / "unloaded")

    _json_dump(doc, root / "manifest.json")
    if run.truth is not None:
        _json_dump(run.truth, root / "truth.json")


# -- load ----------------------------------------------------------------


def _read_forces(path: Path) -> tuple[LoadSample, ...]:
    if not path.is_file():
        raise ManifestError(f"missing force log {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FORCES_HEADER:
            raise ManifestError(
                f"{path}: expected header {','.join(FORCES_HEADER)}, got {header}"
            )
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, fx, fy, fz = (float(v) for v in row)
            except ValueError:
                raise ManifestError(f"{path}:{lineno}: bad force row {row}") from None
            samples.append(LoadSample(timestamp_s=t, fz_n=fz, fx_n=fx, fy_n=fy))
    if not samples:
        raise ManifestError(f"{path}: empty force log")
    return tuple(samples)


def load_manifest(path: str | Path) -> RunManifest:
    """Load and fully validate the run stored at ``path``.

    All referenced frames are decoded eagerly; any missing file, schema
    problem, or dimension mismatch raises ManifestError naming the culprit.
    """
    root = Path(path)
    mf = root / "manifest.json"
    if not mf.is_file():
        raise ManifestError(f"{mf}: manifest file not found")
    try:
        doc = json.loads(mf.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{mf}: invalid JSON ({exc})") from None
    where = str(mf)

    version = _req(doc, "schema_version", int, where)
    if version != SCHEMA_VERSION:
        raise ManifestError(f"{where}: unsupported schema_version {version}")
    kind_str = _req(doc, "protocol", str, where)
    try:
        kind = ProtocolKind(kind_str)
    except ValueError:
        raise ManifestError(f"{where}: unknown protocol '{kind_str}'") from None
    params = _req(doc, "parameters", dict, where)
    material = _req(doc, "material_label", str, where)
    sample = _req(doc, "sample_id", str, where)
    res = _req(doc, "resolution", dict, where)
    resolution = (int(_req(res, "w", int, where)), int(_req(res, "h", int, where)))
    fps = _req(doc, "fps", float, where)
    mm_per_pixel = doc.get("mm_per_pixel")
    if mm_per_pixel is not None:
        mm_per_pixel = float(mm_per_pixel)
    layout = _req(doc, "layout", dict, where)
    layout_kind = _req(layout, "kind", str, where)

    truth = None
    truth_path = root / "truth.json"
    if truth_path.is_file():
        try:
            truth = json.loads(truth_path.read_text())
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{truth_path}: invalid JSON ({exc})") from None

    common: dict[str, Any] = dict(
        protocol=Protocol(kind=kind, params=params),
        material_label=material,
        sample_id=sample,
        mm_per_pixel=mm_per_pixel,
        resolution=resolution,
        fps=fps,
        truth=truth,
        source=str(root),
    )

    try:
        if kind in RESILIENCE_KINDS:
            if layout_kind != "cycles":
                raise ManifestError(f"{where}: protocol {kind.value} needs layout kind 'cycles'")
            n_cycles = _req(layout, "cycle_count", int, where)
            unloaded_n = _req(layout, "unloaded_frames", int, where)
            loaded_n = _req(layout, "loaded_frames", int, where)
            cycles = []
            for idx in range(1, n_cycles + 1):
                cdir = _cycle_dir(root, idx)
                unloaded = _read_stack(
                    cdir / "unloaded", unloaded_n, resolution, fps, f"cycle {idx}"
                )
                loaded = None
                if loaded_n > 0:
                    loaded = _read_stack(
                        cdir / "loaded", loaded_n, resolution, fps, f"cycle {idx}"
                    )
                cycles.append(CycleRecord(cycle_index=idx, unloaded=unloaded, loaded=loaded))
            return RunManifest(cycles=tuple(cycles), **common)

        if kind is ProtocolKind.FORCE_SENSITIVITY:
            if layout_kind != "streams":
                raise ManifestError(f"{where}: protocol {kind.value} needs layout kind 'streams'")
            n_frames = _req(layout, "frame_count", int, where)
            ts = _req(layout, "timestamps_s", list, where)
            if len(ts) != n_frames:
                raise ManifestError(
                    f"{where}: {len(ts)} timestamps for {n_frames} frames"
                )
            frames = _read_stack(
                root / "frames",
                n_frames,
                resolution,
                fps,
                "frame stream",
                timestamps=np.asarray(ts, dtype=np.float64),
            )
            forces = _read_forces(root / "forces.csv")
            return RunManifest(frames=frames, forces=forces, **common)

        if layout_kind != "surface":
            raise ManifestError(f"{where}: protocol {kind.value} needs layout kind 'surface'")
        rdoc = _req(layout, "ridge", dict, where)
        ridge = RidgeSpec(
            period_mm=_req(rdoc, "period_mm", float, where),
            amplitude_mm=_req(rdoc, "amplitude_mm", float, where),
            orientation=_req(rdoc, "orientation", str, where),
        )
        load_n = _req(layout, "load_n", float, where)
        loaded = _read_stack(
            root / "loaded",
            _req(layout, "loaded_frames", int, where),
            resolution,
            fps,
            "loaded stack",
        )
        unloaded = _read_stack(
            root / "unloaded",
            _req(layout, "unloaded_frames", int, where),
            resolution,
            fps,
            "unloaded stack",
        )
        return RunManifest(
            ridge=ridge, load_n=load_n, loaded=loaded, unloaded=unloaded, **common
        )
    except ValidationError:
        raise
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from None
