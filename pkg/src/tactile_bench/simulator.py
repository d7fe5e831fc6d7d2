"""Synthetic sensor-frame generator used as the verification oracle.

A frame is composed additively: a smooth low-frequency illumination field,
plus a contact signal (ridge sinusoid inside an elliptical contact patch,
or a radial indenter blob), plus white Gaussian pixel noise.  The model is
intensity-additive on purpose, not photometric: every analysis in this
package operates on intensity differences, so relative signal scales are
all that matter.  Simulator constants are parametric fiction tuned to
reproduce the qualitative material contrasts, not measured gel data.

Determinism: every operation is a pure function of (inputs, seed).  All
randomness flows through numpy's PCG64 seeded with
``SeedSequence(seed, spawn_key=...)``:

    (0,)                     illumination field
    (1, i)                   noise draw i of render / render_stack
    (2, cycle, stack, i)     per-frame noise in generated runs
                             (stack 0 = unloaded, 1 = loaded)
    (3, k)                   geometry of wear event k
    (4,)                     force-log noise
    (5, j)                   child seed for surface j of a sweep

so any frame in any generated artifact can be re-derived independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import kernels
from .core import (
    CycleRecord,
    FrameStack,
    LoadSample,
    Protocol,
    ProtocolKind,
    RESILIENCE_KINDS,
    RidgeSpec,
    RunManifest,
    ValidationError,
)
from .manifest import quantize_u8

# Normalized load response: drive(reference force) == 1.
REFERENCE_FORCE_N = 10.0

# Intensity model constants (simulator fiction).
INDENT_DEPTH_MM = 0.05          # indentation depth per unit drive
CONTACT_BASE_FRAC = 0.35        # ellipse semi-axis fraction at zero load
CONTACT_PER_N = 0.02            # growth per newton
CONTACT_MAX_FRAC = 0.60
CONTACT_SOFT_PX = 10.0          # taper band at the contact edge
CHANNEL_WEIGHTS = (1.0, 0.8, 0.65)  # RGB response to the contact signal

# Default camera calibration: a ~19.2 mm wide gel viewed full-frame.
SENSOR_WIDTH_MM = 19.2

FORCE_LOG_RATE_MULT = 4         # force log samples per frame interval
DEFAULT_FORCE_NOISE_N = 0.05

WEAR_MODES = ("puncture", "tear", "delamination", "abrasion_speckle")

# Damage appears at half its severity at onset, then ramps linearly to full
# severity at the final cycle: punctures and tears are events, not drifts.
WEAR_ONSET_FRACTION = 0.5


def default_mm_per_pixel(resolution: tuple[int, int]) -> float:
    return SENSOR_WIDTH_MM / resolution[0]


@dataclass(frozen=True)
class MaterialProfile:
    """Parametric gel response: intensity gain, load curve, noise, wear rates.

    gain is intensity units per mm of surface displacement at unit drive;
    ``response`` is "linear" or "saturating" (knee force plus post-knee
    slope fraction); ``wear_susceptibility`` scales injected wear severity
    per failure mode (missing modes default to 1).
    """

    name: str
    gain: float
    response: str = "linear"
    knee_force_n: float = 10.0
    post_knee_fraction: float = 0.1
    noise_sigma: float = 2.0
    wear_susceptibility: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.gain > 0:
            raise ValidationError(f"MaterialProfile: gain must be > 0, got {self.gain}")
        if self.response not in ("linear", "saturating"):
            raise ValidationError(
                f"MaterialProfile: response must be 'linear' or 'saturating', got {self.response!r}"
            )
        if not self.knee_force_n > 0:
            raise ValidationError("MaterialProfile: knee_force_n must be > 0")
        if not 0.0 <= self.post_knee_fraction <= 1.0:
            raise ValidationError("MaterialProfile: post_knee_fraction must be in [0, 1]")
        if self.noise_sigma < 0:
            raise ValidationError("MaterialProfile: noise_sigma must be >= 0")
        object.__setattr__(self, "wear_susceptibility", dict(self.wear_susceptibility))

    def drive(self, force_n: float) -> float:
        """Normalized contact drive at a given normal force (0 at no load)."""
        if force_n <= 0:
            return 0.0
        if self.response == "linear" or force_n <= self.knee_force_n:
            return force_n / REFERENCE_FORCE_N
        return (
            self.knee_force_n + self.post_knee_fraction * (force_n - self.knee_force_n)
        ) / REFERENCE_FORCE_N

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "gain": self.gain,
            "response": self.response,
            "knee_force_n": self.knee_force_n,
            "post_knee_fraction": self.post_knee_fraction,
            "noise_sigma": self.noise_sigma,
            "wear_susceptibility": dict(self.wear_susceptibility),
        }


# Named presets: a saturating high-gain gel and a linear lower-gain one,
# mirroring the qualitative silicone/polyurethane contrast.  The numbers
# are simulator fiction, not measured material data.
MATERIAL_PRESETS: dict[str, MaterialProfile] = {
    "si_like": MaterialProfile(
        name="si_like",
        gain=1200.0,
        response="saturating",
        knee_force_n=10.0,
        post_knee_fraction=0.1,
        noise_sigma=2.0,
        wear_susceptibility={
            "puncture": 1.0,
            "tear": 1.0,
            "delamination": 0.8,
            "abrasion_speckle": 1.0,
        },
    ),
    "pu_like": MaterialProfile(
        name="pu_like",
        gain=450.0,
        response="linear",
        noise_sigma=1.5,
        wear_susceptibility={
            "puncture": 0.15,
            "tear": 0.2,
            "delamination": 0.05,
            "abrasion_speckle": 0.4,
        },
    ),
}


@dataclass(frozen=True)
class SceneSpec:
    """What the sensor is pressed against, and how hard.

    kind is "flat" (no contact signal), "ridged" (periodic surface), or
    "indenter" (spherical tip).  ``load_n`` of 0 models the unloaded sensor
    regardless of kind.
    """

    kind: str
    load_n: float
    mm_per_pixel: float
    resolution: tuple[int, int]
    ridge: RidgeSpec | None = None
    tip_radius_mm: float | None = None
    tip_position_px: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("flat", "ridged", "indenter"):
            raise ValidationError(f"SceneSpec: unknown kind {self.kind!r}")
        if not self.mm_per_pixel > 0:
            raise ValidationError("SceneSpec: mm_per_pixel must be > 0")
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ValidationError(f"SceneSpec: bad resolution {self.resolution}")
        object.__setattr__(self, "resolution", (int(w), int(h)))
        if self.load_n < 0:
            raise ValidationError("SceneSpec: load_n must be >= 0")
        if self.kind == "ridged":
            if self.ridge is None:
                raise ValidationError("SceneSpec: ridged scene needs a RidgeSpec")
            if self.ridge.period_mm < 2.0 * self.mm_per_pixel:
                raise ValidationError(
                    f"SceneSpec: ridge period {self.ridge.period_mm:g} mm is below the "
                    f"Nyquist bound 2*{self.mm_per_pixel:g} mm/pixel"
                )
        if self.kind == "indenter" and not (self.tip_radius_mm and self.tip_radius_mm > 0):
            raise ValidationError("SceneSpec: indenter scene needs tip_radius_mm > 0")


@dataclass(frozen=True)
class WearEvent:
    """An injected failure: mode, onset cycle, final severity, location."""

    mode: str
    onset_cycle: int
    severity: float
    location: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.mode not in WEAR_MODES:
            raise ValidationError(f"WearEvent: unknown mode {self.mode!r}; known: {WEAR_MODES}")
        if self.onset_cycle < 1:
            raise ValidationError("WearEvent: onset_cycle is 1-based and must be >= 1")
        if not 0.0 <= self.severity <= 1.0:
            raise ValidationError(f"WearEvent: severity must be in [0, 1], got {self.severity}")
        if self.location is not None:
            object.__setattr__(self, "location", (float(self.location[0]), float(self.location[1])))

    def severity_at(self, cycle: int, n_cycles: int) -> float:
        """Effective severity at a cycle: 0 before onset, then an affine ramp
        from half severity at onset to full severity at the final cycle."""
        if cycle < self.onset_cycle:
            return 0.0
        if n_cycles <= self.onset_cycle:
            progress = 1.0
        else:
            progress = (cycle - self.onset_cycle) / (n_cycles - self.onset_cycle)
        return self.severity * (WEAR_ONSET_FRACTION + (1.0 - WEAR_ONSET_FRACTION) * progress)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "onset_cycle": self.onset_cycle,
            "severity": self.severity,
            "location": list(self.location) if self.location is not None else None,
        }


# -- rng plumbing ----------------------------------------------------------


def _rng(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def child_seed(seed: int, index: int) -> int:
    """Derived integer seed for sub-artifact ``index`` (stream (5, index))."""
    return int(np.random.SeedSequence(seed, spawn_key=(5, index)).generate_state(1)[0])


# -- image composition -----------------------------------------------------


def _grid(resolution: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    w, h = resolution
    y = np.arange(h, dtype=np.float64)[:, np.newaxis]
    x = np.arange(w, dtype=np.float64)[np.newaxis, :]
    return x, y


def illumination_field(resolution: tuple[int, int], seed: int) -> np.ndarray:
    """Smooth per-channel illumination: base level, tilt, one slow cosine."""
    w, h = resolution
    x, y = _grid(resolution)
    xn = x / w - 0.5
    yn = y / h - 0.5
    rng = _rng(seed, (0,))
    img = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        level = 110.0 + 20.0 * rng.uniform()
        tilt_x = rng.uniform(-12.0, 12.0)
        tilt_y = rng.uniform(-12.0, 12.0)
        amp = rng.uniform(3.0, 8.0)
        kx = rng.uniform(0.4, 0.9)
        ky = rng.uniform(0.4, 0.9)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        img[:, :, c] = (
            level
            + tilt_x * xn
            + tilt_y * yn
            + amp * np.cos(2.0 * np.pi * (kx * xn + ky * yn) + phase)
        )
    return img


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def contact_mask(resolution: tuple[int, int], load_n: float) -> np.ndarray:
    """Elliptical contact patch, growing with load, soft edged."""
    w, h = resolution
    frac = min(CONTACT_BASE_FRAC + CONTACT_PER_N * load_n, CONTACT_MAX_FRAC)
    a = frac * w
    b = frac * h
    x, y = _grid(resolution)
    rho = np.sqrt(((x - w / 2.0) / a) ** 2 + ((y - h / 2.0) / b) ** 2)
    soft = CONTACT_SOFT_PX / min(a, b)
    return _smoothstep((1.0 - rho) / soft)


def contact_signal(scene: SceneSpec, material: MaterialProfile) -> np.ndarray:
    """Noise-free contact term (single channel, before channel weighting)."""
    w, h = scene.resolution
    drive = material.drive(scene.load_n)
    if scene.kind == "flat" or drive == 0.0:
        return np.zeros((h, w), dtype=np.float64)
    x, y = _grid(scene.resolution)
    if scene.kind == "ridged":
        assert scene.ridge is not None
        amplitude = material.gain * drive * scene.ridge.amplitude_mm
        period_px = scene.ridge.period_mm / scene.mm_per_pixel
        if scene.ridge.orientation == "vertical":
            wave = np.cos(2.0 * np.pi * x / period_px)
        else:
            wave = np.cos(2.0 * np.pi * y / period_px)
        return amplitude * wave * contact_mask(scene.resolution, scene.load_n)
    # indenter blob
    assert scene.tip_radius_mm is not None
    cx, cy = scene.tip_position_px if scene.tip_position_px is not None else (w / 2.0, h / 2.0)
    rho_px = scene.tip_radius_mm / scene.mm_per_pixel
    r2 = (x - cx) ** 2 + (y - cy) ** 2
    peak = material.gain * drive * INDENT_DEPTH_MM
    return peak * np.exp(-r2 / (2.0 * rho_px**2))


def clean_image(scene: SceneSpec, material: MaterialProfile, seed: int) -> np.ndarray:
    """Illumination plus channel-weighted contact signal, noise free."""
    img = illumination_field(scene.resolution, seed)
    signal = contact_signal(scene, material)
    if signal.any():
        for c, weight in enumerate(CHANNEL_WEIGHTS):
            img[:, :, c] += weight * signal
    return img


def _noise_frame(
    resolution: tuple[int, int], sigma: float, seed: int, key: tuple[int, ...]
) -> np.ndarray | None:
    if sigma == 0.0:
        return None
    w, h = resolution
    return _rng(seed, key).normal(0.0, sigma, size=(h, w, 3))


def render(scene: SceneSpec, material: MaterialProfile, seed: int) -> np.ndarray:
    """One frame: illumination + contact + noise, real-valued and unclamped."""
    img = clean_image(scene, material, seed)
    noise = _noise_frame(scene.resolution, material.noise_sigma, seed, (1, 0))
    return img if noise is None else img + noise


def render_stack(
    scene: SceneSpec,
    material: MaterialProfile,
    n_frames: int,
    seed: int,
    fps: float = 30.0,
) -> FrameStack:
    """Independent noise draws over a fixed underlying image.

    Frame i uses noise stream (1, i), so a 1-frame stack equals render()
    for the same seed bit for bit.
    """
    if n_frames < 1:
        raise ValidationError(f"render_stack: n_frames must be >= 1, got {n_frames}")
    img = clean_image(scene, material, seed)
    w, h = scene.resolution
    frames = np.empty((n_frames, h, w, 3), dtype=np.float64)
    for i in range(n_frames):
        noise = _noise_frame(scene.resolution, material.noise_sigma, seed, (1, i))
        frames[i] = img if noise is None else img + noise
    return FrameStack(frames, nominal_fps=fps)


# -- wear overlays ---------------------------------------------------------


def _event_geometry(event: WearEvent, resolution: tuple[int, int], seed: int, index: int) -> dict:
    w, h = resolution
    rng = _rng(seed, (3, index))
    angle = rng.uniform(0.0, np.pi)
    if event.location is not None:
        cx, cy = event.location
    elif event.mode == "delamination":
        cx, cy = 0.30 * w, 0.35 * h
    else:
        cx, cy = w / 2.0, h / 2.0
    speckle = None
    if event.mode == "abrasion_speckle":
        raw = rng.uniform(-1.0, 1.0, size=(h, w))
        smooth = kernels.gaussian_blur(raw[:, :, np.newaxis], 1.5)[:, :, 0]
        speckle = smooth / smooth.std()
    return {"cx": cx, "cy": cy, "angle": angle, "speckle": speckle}


def _apply_wear(img: np.ndarray, event: WearEvent, geo: dict, severity_eff: float) -> None:
    if severity_eff <= 0.0:
        return
    h, w = img.shape[:2]
    min_dim = float(min(h, w))
    x, y = _grid((w, h))
    cx, cy = geo["cx"], geo["cy"]
    if event.mode == "puncture":
        radius = 0.06 * min_dim
        r = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        patch = -150.0 * severity_eff * _smoothstep((radius - r) / 2.0)
    elif event.mode == "tear":
        angle = geo["angle"]
        u = (x - cx) * np.cos(angle) + (y - cy) * np.sin(angle)
        v = -(x - cx) * np.sin(angle) + (y - cy) * np.cos(angle)
        length = 0.35 * min_dim
        width = max(0.015 * min_dim, 2.0)
        patch = -120.0 * severity_eff * np.exp(
            -(u**2) / (2.0 * (length / 2.355) ** 2) - (v**2) / (2.0 * (width / 2.355) ** 2)
        )
    elif event.mode == "delamination":
        r = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        ring_r = 0.22 * min_dim
        thickness = 0.07 * min_dim
        patch = 45.0 * severity_eff * np.exp(-((r - ring_r) ** 2) / (2.0 * (thickness / 2.0) ** 2))
    else:  # abrasion_speckle
        factor = 1.0 + 0.18 * severity_eff * geo["speckle"]
        for c, weight in enumerate(CHANNEL_WEIGHTS):
            img[:, :, c] *= 1.0 + weight * (factor - 1.0)
        return
    for c, weight in enumerate(CHANNEL_WEIGHTS):
        img[:, :, c] += weight * patch


# -- run generation --------------------------------------------------------


def _loaded_scene(protocol: Protocol, resolution: tuple[int, int], mm_per_pixel: float) -> SceneSpec:
    kind = protocol.kind
    load = float(protocol.param("normal_load_n"))
    if kind is ProtocolKind.CYCLIC_TRANSVERSE_SHEAR:
        # Whole-face plate contact: a broad dome rather than a local tip.
        return SceneSpec(
            kind="indenter",
            load_n=load,
            mm_per_pixel=mm_per_pixel,
            resolution=resolution,
            tip_radius_mm=0.3 * min(resolution) * mm_per_pixel,
        )
    tip_radius = float(protocol.param("tip_diameter_mm", 4.0)) / 2.0
    position = None
    if kind is ProtocolKind.CYCLIC_LOCAL_SHEAR:
        # Lateral load drags the contact sideways a little.
        shift = 1.5 * float(protocol.param("lateral_load_n", 0.0))
        position = (resolution[0] / 2.0 + shift, resolution[1] / 2.0)
    return SceneSpec(
        kind="indenter",
        load_n=load,
        mm_per_pixel=mm_per_pixel,
        resolution=resolution,
        tip_radius_mm=tip_radius,
        tip_position_px=position,
    )


def _quantized_stack(
    clean: np.ndarray,
    sigma: float,
    n_frames: int,
    seed: int,
    cycle: int,
    stack_id: int,
    fps: float,
) -> FrameStack:
    # Record-path noise is float32; these streams are not interchangeable
    # with the float64 draws of render/render_stack.
    h, w = clean.shape[:2]
    base = clean.astype(np.float32)
    frames = np.empty((n_frames, h, w, 3), dtype=np.uint8)
    buf = np.empty_like(base)
    for i in range(n_frames):
        if sigma > 0:
            rng = _rng(seed, (2, cycle, stack_id, i))
            noisy = rng.standard_normal(size=base.shape, dtype=np.float32, out=buf)
            noisy *= sigma
            noisy += base
        else:
            np.copyto(buf, base)
            noisy = buf
        np.rint(noisy, out=noisy)
        np.clip(noisy, 0.0, 255.0, out=noisy)
        frames[i] = noisy.astype(np.uint8)
    return FrameStack(frames, nominal_fps=fps)


def _truth(seed: int, material: MaterialProfile, wear: Sequence[WearEvent]) -> dict[str, Any]:
    return {
        "generator": "tactile-bench simulator",
        "seed": int(seed),
        "material": material.to_dict(),
        "events": [e.to_dict() for e in wear],
    }


def generate_run(
    protocol: Protocol,
    material: MaterialProfile,
    wear: Sequence[WearEvent] = (),
    seed: int = 0,
    material_label: str | None = None,
    sample_id: str = "sim-0001",
) -> RunManifest:
    """Produce a complete synthetic run for any protocol kind.

    All generated runs hold frames quantized to 8-bit, like the camera they
    model, so save/load round-trips them bit exactly and 1000-cycle runs
    stay within memory; use render_stack / generate_force_ramp directly
    when the unquantized signal is wanted.  Force sensitivity delegates to
    generate_force_ramp; spatial kinds need a concrete surface in the
    protocol params ("ridge" and "load_n").  A ground-truth sidecar listing
    the injected wear and material parameters rides along as ``truth``.
    """
    label = material_label if material_label is not None else material.name
    params = protocol.params
    resolution = tuple(int(v) for v in params.get("resolution", (320, 240)))
    fps = float(params.get("fps", 30.0))
    mm_per_pixel = float(params.get("mm_per_pixel") or default_mm_per_pixel(resolution))
    kind = protocol.kind

    if kind not in RESILIENCE_KINDS:
        if wear:
            raise ValidationError(
                f"generate_run: wear events only apply to resilience protocols, not {kind.value}"
            )
        if kind is ProtocolKind.FORCE_SENSITIVITY:
            frames, forces = generate_force_ramp(
                material,
                max_force=float(params.get("max_force_n", 40.0)),
                n_samples=int(params.get("n_samples", 240)),
                seed=seed,
                fps=fps,
                resolution=resolution,
                tip_radius_mm=float(params.get("tip_diameter_mm", 4.0)) / 2.0,
                mm_per_pixel=mm_per_pixel,
            )
            recorded = FrameStack(
                quantize_u8(frames.frames),
                nominal_fps=fps,
                timestamps_s=frames.timestamps_s,
            )
            return RunManifest(
                protocol=protocol,
                material_label=label,
                sample_id=sample_id,
                mm_per_pixel=mm_per_pixel,
                resolution=resolution,
                fps=fps,
                frames=recorded,
                forces=forces,
                truth=_truth(seed, material, ()),
            )
        # spatial surface
        rdoc = params.get("ridge")
        load_n = params.get("load_n")
        if rdoc is None or load_n is None:
            raise ValidationError(
                "generate_run: spatial protocol params need a concrete 'ridge' and 'load_n'"
            )
        ridge = RidgeSpec(
            period_mm=float(rdoc["period_mm"]),
            amplitude_mm=float(rdoc["amplitude_mm"]),
            orientation=str(rdoc.get("orientation", "vertical")),
        )
        n_frames = int(params.get("frames_per_stack", 8))
        scene_loaded = SceneSpec(
            kind="ridged",
            load_n=float(load_n),
            mm_per_pixel=mm_per_pixel,
            resolution=resolution,
            ridge=ridge,
        )
        clean_loaded = clean_image(scene_loaded, material, seed)
        clean_unloaded = illumination_field(resolution, seed)
        return RunManifest(
            protocol=protocol,
            material_label=label,
            sample_id=sample_id,
            mm_per_pixel=mm_per_pixel,
            resolution=resolution,
            fps=fps,
            ridge=ridge,
            load_n=float(load_n),
            loaded=_quantized_stack(clean_loaded, material.noise_sigma, n_frames, seed, 1, 1, fps),
            unloaded=_quantized_stack(clean_unloaded, material.noise_sigma, n_frames, seed, 1, 0, fps),
            truth=_truth(seed, material, ()),
        )

    # resilience protocols
    if kind is ProtocolKind.ABRASION:
        schedule = list(params.get("distance_schedule_m", [2.0, 4.0, 6.0, 8.0]))
        n_cycles = len(schedule)
    else:
        n_cycles = int(params.get("cycles", 1000))
    if n_cycles < 1:
        raise ValidationError("generate_run: need at least one cycle")
    for event in wear:
        if event.onset_cycle > n_cycles:
            raise ValidationError(
                f"generate_run: wear onset cycle {event.onset_cycle} beyond final cycle {n_cycles}"
            )
    n_frames = int(params.get("frames_per_stack", 10))
    has_loaded = kind is not ProtocolKind.ABRASION

    base_unloaded = illumination_field(resolution, seed)
    base_loaded = None
    if has_loaded:
        scene = _loaded_scene(protocol, resolution, mm_per_pixel)
        base_loaded = base_unloaded + 0.0
        signal = contact_signal(scene, material)
        for c, weight in enumerate(CHANNEL_WEIGHTS):
            base_loaded[:, :, c] += weight * signal

    geometries = [_event_geometry(e, resolution, seed, k) for k, e in enumerate(wear)]
    susceptibility = [material.wear_susceptibility.get(e.mode, 1.0) for e in wear]

    cycles = []
    for c in range(1, n_cycles + 1):
        active = [
            (e, g, s)
            for e, g, s in zip(wear, geometries, susceptibility)
            if e.severity_at(c, n_cycles) > 0
        ]
        clean_u = base_unloaded
        clean_l = base_loaded
        if active:
            clean_u = base_unloaded.copy()
            clean_l = base_loaded.copy() if base_loaded is not None else None
            for e, g, s in active:
                eff = s * e.severity_at(c, n_cycles)
                _apply_wear(clean_u, e, g, eff)
                if clean_l is not None:
                    _apply_wear(clean_l, e, g, eff)
        unloaded = _quantized_stack(clean_u, material.noise_sigma, n_frames, seed, c, 0, fps)
        loaded = (
            _quantized_stack(clean_l, material.noise_sigma, n_frames, seed, c, 1, fps)
            if clean_l is not None
            else None
        )
        cycles.append(CycleRecord(cycle_index=c, unloaded=unloaded, loaded=loaded))

    return RunManifest(
        protocol=protocol,
        material_label=label,
        sample_id=sample_id,
        mm_per_pixel=mm_per_pixel,
        resolution=resolution,
        fps=fps,
        cycles=tuple(cycles),
        truth=_truth(seed, material, wear),
    )


def generate_force_ramp(
    material: MaterialProfile,
    max_force: float,
    n_samples: int,
    seed: int,
    fps: float = 30.0,
    resolution: tuple[int, int] = (320, 240),
    tip_radius_mm: float = 2.0,
    mm_per_pixel: float | None = None,
    force_noise_n: float = DEFAULT_FORCE_NOISE_N,
) -> tuple[FrameStack, list[LoadSample]]:
    """Triangular load ramp 0 -> max_force -> 0 on a spherical indenter.

    Returns n_samples timestamped frames plus a force log sampled at
    ``FORCE_LOG_RATE_MULT`` times the frame rate (different rates on
    purpose, to exercise time alignment downstream).
    """
    if not max_force > 0:
        raise ValidationError(f"generate_force_ramp: max_force must be > 0, got {max_force}")
    if n_samples < 4:
        raise ValidationError(f"generate_force_ramp: need at least 4 samples, got {n_samples}")
    mpp = mm_per_pixel if mm_per_pixel is not None else default_mm_per_pixel(resolution)
    w, h = resolution
    duration = (n_samples - 1) / fps
    t_frames = np.arange(n_samples, dtype=np.float64) / fps

    def profile(t: np.ndarray) -> np.ndarray:
        return max_force * (1.0 - np.abs(2.0 * t / duration - 1.0))

    illum = illumination_field(resolution, seed)
    x, y = _grid(resolution)
    rho_px = tip_radius_mm / mpp
    blob = np.exp(-((x - w / 2.0) ** 2 + (y - h / 2.0) ** 2) / (2.0 * rho_px**2))
    frames = np.empty((n_samples, h, w, 3), dtype=np.float64)
    forces_at_frames = profile(t_frames)
    for i in range(n_samples):
        peak = material.gain * material.drive(float(forces_at_frames[i])) * INDENT_DEPTH_MM
        frame = illum.copy()
        for c, weight in enumerate(CHANNEL_WEIGHTS):
            frame[:, :, c] += weight * peak * blob
        noise = _noise_frame(resolution, material.noise_sigma, seed, (2, 1, 0, i))
        frames[i] = frame if noise is None else frame + noise
    stack = FrameStack(frames, nominal_fps=fps, timestamps_s=t_frames)

    n_log = FORCE_LOG_RATE_MULT * (n_samples - 1) + 1
    t_log = np.arange(n_log, dtype=np.float64) / (FORCE_LOG_RATE_MULT * fps)
    fz = profile(t_log)
    if force_noise_n > 0:
        rng = _rng(seed, (4,))
        fz = fz + rng.normal(0.0, force_noise_n, size=n_log)
        lateral = rng.normal(0.0, 0.2 * force_noise_n, size=(n_log, 2))
    else:
        lateral = np.zeros((n_log, 2))
    samples = [
        LoadSample(
            timestamp_s=float(t_log[i]),
            fz_n=float(fz[i]),
            fx_n=float(lateral[i, 0]),
            fy_n=float(lateral[i, 1]),
        )
        for i in range(n_log)
    ]
    return stack, samples


def spatial_sweep_surfaces(params: Mapping[str, Any]) -> list[tuple[str, RidgeSpec, float]]:
    """Expand spatial-sweep parameters into (name, ridge, load) surfaces.

    Per load: sweep_points amplitudes at the constant period, sweep_points
    periods at the constant amplitude, and one flat (amplitude 0) surface
    for the noise floor.
    """
    loads = [float(v) for v in params.get("loads_n", [2.0, 10.0])]
    points = int(params.get("sweep_points", 10))
    amp_lo, amp_hi = (float(v) for v in params.get("amplitude_range_mm", [0.005, 0.05]))
    per_lo, per_hi = (float(v) for v in params.get("period_range_mm", [0.6, 1.5]))
    const_period = float(params.get("constant_period_mm", per_hi))
    const_amp = float(params.get("constant_amplitude_mm", amp_hi))
    surfaces: list[tuple[str, RidgeSpec, float]] = []
    for load in loads:
        surfaces.append((f"load{load:g}n_flat", RidgeSpec(const_period, 0.0), load))
        for i, amp in enumerate(np.linspace(amp_lo, amp_hi, points)):
            surfaces.append(
                (f"load{load:g}n_amp{i:02d}", RidgeSpec(const_period, float(amp)), load)
            )
        for i, period in enumerate(np.linspace(per_lo, per_hi, points)):
            surfaces.append(
                (f"load{load:g}n_per{i:02d}", RidgeSpec(float(period), const_amp), load)
            )
    return surfaces
