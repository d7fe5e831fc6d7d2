"""Spatial-sensitivity pipeline.

Stages: average the loaded and unloaded stacks, subtract to isolate the
contact signal, bandpass with a difference of Gaussians, crop away lens and
gel-edge artifacts, take 1-D FFT power spectra along every scan line and
channel (mean-centered, no window, no padding), and average them into one
spectrum.  Sensitivity is the ratio, in dB, of the summed power of the two
bins nearest the known ridge frequency to the same bins' power from a flat
surface under the same load.

PSD convention: one-sided |DFT|^2 / fft_length with interior bins doubled,
so the bins of one spectrum sum to the mean-centered signal's sum of
squares.  Any fixed convention cancels in the SNR ratio.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .core import (
    ConfigError,
    FrameStack,
    ProtocolKind,
    RidgeSpec,
    RunManifest,
    ValidationError,
    ensure_frame,
)
from .metrics import average_frames

# Scan directions for the 1-D spectra.  "across_columns" scans along image
# rows (samples vary with x; use for vertical ridge lines), "across_rows"
# scans along image columns (use for horizontal ridge lines).
ACROSS_COLUMNS = "across_columns"
ACROSS_ROWS = "across_rows"
ROWS_AXES = (ACROSS_COLUMNS, ACROSS_ROWS)

MIN_FFT_SAMPLES = 16

# Default crop keeps the central 60% of both dimensions.
CROP_FRACTION = 0.6


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable pipeline parameters.

    crop is (x, y, w, h) in pixels; None selects the central 60% of the
    frame at run time.  Results should always be reported together with the
    config they were produced by.
    """

    dog_sigma_low: float = 2.0
    dog_sigma_high: float = 12.0
    crop: tuple[int, int, int, int] | None = None
    rows_axis: str = ACROSS_COLUMNS

    def __post_init__(self) -> None:
        if not (0 < self.dog_sigma_low < self.dog_sigma_high):
            raise ValidationError(
                "PipelineConfig: need 0 < dog_sigma_low < dog_sigma_high, got "
                f"{self.dog_sigma_low} / {self.dog_sigma_high}"
            )
        if self.rows_axis not in ROWS_AXES:
            raise ValidationError(
                f"PipelineConfig: rows_axis must be one of {ROWS_AXES}, got {self.rows_axis!r}"
            )
        if self.crop is not None:
            crop = tuple(int(v) for v in self.crop)
            if len(crop) != 4 or crop[2] < 1 or crop[3] < 1 or crop[0] < 0 or crop[1] < 0:
                raise ValidationError(f"PipelineConfig: bad crop rectangle {self.crop}")
            object.__setattr__(self, "crop", crop)

    def to_dict(self) -> dict:
        return {
            "dog_sigma_low": self.dog_sigma_low,
            "dog_sigma_high": self.dog_sigma_high,
            "crop": list(self.crop) if self.crop is not None else None,
            "rows_axis": self.rows_axis,
        }


def resolve_crop(config: PipelineConfig, shape_hw: tuple[int, int]) -> tuple[int, int, int, int]:
    """Concrete (x, y, w, h) for this frame; validates it fits inside."""
    h, w = shape_hw
    if config.crop is None:
        cw = max(int(round(w * CROP_FRACTION)), 1)
        ch = max(int(round(h * CROP_FRACTION)), 1)
        x = (w - cw) // 2
        y = (h - ch) // 2
        return (x, y, cw, ch)
    x, y, cw, ch = config.crop
    if x + cw > w or y + ch > h:
        raise ConfigError(
            f"crop {config.crop} exceeds frame bounds {w}x{h}"
        )
    return (x, y, cw, ch)


def background_subtract(loaded: np.ndarray, unloaded: np.ndarray) -> np.ndarray:
    """Signed per-pixel difference loaded - unloaded, unclamped float64."""
    a = ensure_frame(loaded, "loaded")
    b = ensure_frame(unloaded, "unloaded")
    if a.shape != b.shape:
        raise ValidationError(
            f"background_subtract: dimension mismatch {a.shape} vs {b.shape}"
        )
    return a.astype(np.float64) - b.astype(np.float64)


def bandpass_dog(img: np.ndarray, config: PipelineConfig) -> np.ndarray:
    """Difference-of-Gaussians bandpass, per channel.

    blur(sigma_low) - blur(sigma_high); kernels truncated at 3 sigma and
    normalized to unit sum, borders replicated.
    """
    frame = ensure_frame(img, "bandpass_dog input").astype(np.float64)
    h, w = frame.shape[:2]
    need = 6.0 * config.dog_sigma_high
    if h <= need or w <= need:
        raise ValidationError(
            f"bandpass_dog: image {w}x{h} too small for dog_sigma_high="
            f"{config.dog_sigma_high:g} (needs > {need:g} px in both dimensions)"
        )
    low = kernels.gaussian_blur(frame, config.dog_sigma_low)
    high = kernels.gaussian_blur(frame, config.dog_sigma_high)
    return low - high


def crop_frame(img: np.ndarray, config: PipelineConfig) -> np.ndarray:
    frame = ensure_frame(img, "crop input")
    x, y, cw, ch = resolve_crop(config, frame.shape[:2])
    return np.ascontiguousarray(frame[y : y + ch, x : x + cw, :])


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Averaged one-sided power spectrum plus its bin metadata."""

    psd: np.ndarray
    bin_freqs: np.ndarray
    fft_length: int
    rows_averaged: int
    channels_averaged: int


def row_psd(img: np.ndarray, config: PipelineConfig, mm_per_pixel: float) -> SpectralResult:
    """Mean-centered 1-D power spectra of every scan line and channel, averaged.

    ``img`` must already be cropped.  No window, no zero padding; bin k sits
    at k / (fft_length * mm_per_pixel) cycles/mm.
    """
    if not mm_per_pixel > 0:
        raise ValidationError(f"row_psd: mm_per_pixel must be > 0, got {mm_per_pixel}")
    frame = ensure_frame(img, "row_psd input").astype(np.float64)
    if config.rows_axis == ACROSS_ROWS:
        frame = frame.transpose(1, 0, 2)
    n = frame.shape[1]
    if n < MIN_FFT_SAMPLES:
        raise ValidationError(
            f"row_psd: crop is {n} samples along the FFT axis, need >= {MIN_FFT_SAMPLES}"
        )
    signals = frame.transpose(0, 2, 1).reshape(-1, n)
    centered = signals - signals.mean(axis=1, keepdims=True)
    spectrum = np.fft.rfft(centered, axis=1)
    power = (spectrum.real**2 + spectrum.imag**2) / n
    power[:, 1:] *= 2.0
    if n % 2 == 0:
        power[:, -1] /= 2.0
    psd = power.mean(axis=0)
    bin_freqs = np.arange(psd.shape[0], dtype=np.float64) / (n * mm_per_pixel)
    return SpectralResult(
        psd=psd,
        bin_freqs=bin_freqs,
        fft_length=n,
        rows_averaged=frame.shape[0],
        channels_averaged=frame.shape[2],
    )


def band_power(spec: SpectralResult, target_freq: float) -> float:
    """Summed power of the two bins closest to ``target_freq``.

    Ties break toward the lower-frequency bin; a target exactly on a bin
    takes that bin plus its lower neighbor (the two neighbors tie).
    """
    if spec.psd.shape[0] < 3:
        raise ValidationError("band_power: spectrum needs at least 3 bins")
    if target_freq < 0:
        raise ValidationError(f"band_power: negative target frequency {target_freq}")
    nyquist = float(spec.bin_freqs[-1])
    if target_freq > nyquist:
        raise ValidationError(
            f"band_power: target {target_freq:g} cycles/mm above Nyquist {nyquist:g}"
        )
    distance = np.abs(spec.bin_freqs - target_freq)
    order = np.argsort(distance, kind="stable")
    return float(spec.psd[order[0]] + spec.psd[order[1]])


def snr_db(p_signal: float, p_noise: float) -> float:
    """10 log10(p_signal / p_noise), with explicit sentinels.

    Zero noise with nonzero signal gives +inf; zero signal gives -inf; both
    zero is undefined and reported as NaN (a missing value downstream).
    """
    if p_signal < 0 or p_noise < 0:
        raise ValidationError(
            f"snr_db: powers must be nonnegative, got {p_signal} / {p_noise}"
        )
    if p_noise == 0.0:
        return math.inf if p_signal > 0 else math.nan
    if p_signal == 0.0:
        return -math.inf
    return 10.0 * math.log10(p_signal / p_noise)


@dataclass(frozen=True)
class SnrRecord:
    """One surface's spatial-sensitivity measurement."""

    ridge: RidgeSpec
    load_n: float
    p_signal: float
    p_noise: float
    snr_db: float


def _axis_for(ridge: RidgeSpec) -> str:
    # Scan perpendicular to the ridge lines; lines parallel to the scan
    # carry no periodic signal.
    return ACROSS_COLUMNS if ridge.orientation == "vertical" else ACROSS_ROWS


def pipeline_psd(
    loaded: FrameStack,
    unloaded: FrameStack,
    config: PipelineConfig,
    mm_per_pixel: float,
) -> SpectralResult:
    """Full preprocessing chain ending in the averaged spectrum."""
    delta = background_subtract(average_frames(loaded), average_frames(unloaded))
    filtered = bandpass_dog(delta, config)
    return row_psd(crop_frame(filtered, config), config, mm_per_pixel)


def evaluate_surface(
    loaded: FrameStack,
    unloaded: FrameStack,
    flat_loaded: FrameStack,
    flat_unloaded: FrameStack,
    ridge: RidgeSpec,
    load_n: float,
    config: PipelineConfig | None = None,
    mm_per_pixel: float = 0.0,
) -> SnrRecord:
    """SNR of one ridged surface against its flat noise floor.

    Runs the pipeline for the ridged and flat stacks under the same load
    and compares the two-bin power at the ridge frequency.
    """
    if config is None:
        config = PipelineConfig()
    if not mm_per_pixel > 0:
        raise ValidationError(f"evaluate_surface: mm_per_pixel must be > 0, got {mm_per_pixel}")
    freq = ridge.frequency_cyc_per_mm
    nyquist = 1.0 / (2.0 * mm_per_pixel)
    if freq > nyquist:
        raise ConfigError(
            f"ridge frequency {freq:g} cycles/mm exceeds the Nyquist limit "
            f"{nyquist:g} cycles/mm at {mm_per_pixel:g} mm/pixel"
        )
    cfg = dataclasses.replace(config, rows_axis=_axis_for(ridge))
    signal_spec = pipeline_psd(loaded, unloaded, cfg, mm_per_pixel)
    noise_spec = pipeline_psd(flat_loaded, flat_unloaded, cfg, mm_per_pixel)
    p_signal = band_power(signal_spec, freq)
    p_noise = band_power(noise_spec, freq)
    return SnrRecord(
        ridge=ridge,
        load_n=load_n,
        p_signal=p_signal,
        p_noise=p_noise,
        snr_db=snr_db(p_signal, p_noise),
    )


def sweep(
    runs: Sequence[RunManifest],
    config: PipelineConfig | None = None,
    jobs: int = 1,
) -> list[SnrRecord]:
    """Evaluate a set of spatial-surface runs against their flat noise floors.

    Flat runs (ridge amplitude 0) supply the noise spectrum for every
    ridged run at the same load; their spectra are computed once per
    (load, scan axis).  Records come back ordered by (load, period,
    amplitude).
    """
    if config is None:
        config = PipelineConfig()
    if not runs:
        return []
    flats: dict[float, RunManifest] = {}
    ridged: list[RunManifest] = []
    for run in runs:
        if run.protocol.kind is not ProtocolKind.SPATIAL_SENSITIVITY:
            raise ValidationError(
                f"sweep: {run.protocol.kind.value} run is not a spatial surface"
            )
        assert run.ridge is not None and run.load_n is not None
        if run.ridge.is_flat:
            if run.load_n in flats:
                raise ValidationError(
                    f"sweep: duplicate flat-surface run for load {run.load_n:g} N"
                )
            flats[run.load_n] = run
        else:
            ridged.append(run)

    ridged.sort(key=lambda r: (r.load_n, r.ridge.period_mm, r.ridge.amplitude_mm))

    noise_cache: dict[tuple[float, str], SpectralResult] = {}

    def noise_spec(load_n: float, axis: str, mpp: float) -> SpectralResult:
        key = (load_n, axis)
        if key not in noise_cache:
            flat = flats.get(load_n)
            if flat is None:
                raise ValidationError(
                    f"sweep: no flat-surface run for load {load_n:g} N"
                )
            if flat.mm_per_pixel != mpp:
                raise ValidationError(
                    f"sweep: flat run at {load_n:g} N has mm_per_pixel "
                    f"{flat.mm_per_pixel} but the ridged run says {mpp}"
                )
            cfg = dataclasses.replace(config, rows_axis=axis)
            assert flat.loaded is not None and flat.unloaded is not None
            noise_cache[key] = pipeline_psd(flat.loaded, flat.unloaded, cfg, mpp)
        return noise_cache[key]

    def one(run: RunManifest) -> SnrRecord:
        assert run.ridge is not None and run.load_n is not None
        assert run.loaded is not None and run.unloaded is not None
        mpp = run.mm_per_pixel
        assert mpp is not None
        freq = run.ridge.frequency_cyc_per_mm
        nyquist = 1.0 / (2.0 * mpp)
        if freq > nyquist:
            raise ConfigError(
                f"ridge frequency {freq:g} cycles/mm exceeds the Nyquist limit "
                f"{nyquist:g} cycles/mm at {mpp:g} mm/pixel"
            )
        axis = _axis_for(run.ridge)
        cfg = dataclasses.replace(config, rows_axis=axis)
        signal_spec = pipeline_psd(run.loaded, run.unloaded, cfg, mpp)
        p_signal = band_power(signal_spec, freq)
        p_noise = band_power(noise_spec(run.load_n, axis, mpp), freq)
        return SnrRecord(
            ridge=run.ridge,
            load_n=run.load_n,
            p_signal=p_signal,
            p_noise=p_noise,
            snr_db=snr_db(p_signal, p_noise),
        )

    # Prime the noise cache serially so worker threads only read it.
    for run in ridged:
        assert run.ridge is not None and run.load_n is not None and run.mm_per_pixel is not None
        noise_spec(run.load_n, _axis_for(run.ridge), run.mm_per_pixel)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, ridged))
    return [one(run) for run in ridged]


def _csv_num(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return str(x)


def write_sweep_csv(records: Sequence[SnrRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period_mm", "amplitude_mm", "load_n", "p_signal", "p_noise", "snr_db"])
        for rec in records:
            writer.writerow(
                [
                    _csv_num(rec.ridge.period_mm),
                    _csv_num(rec.ridge.amplitude_mm),
                    _csv_num(rec.load_n),
                    _csv_num(rec.p_signal),
                    _csv_num(rec.p_noise),
                    _csv_num(rec.snr_db),
                ]
            )
