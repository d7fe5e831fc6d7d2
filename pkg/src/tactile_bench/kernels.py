"""Hot-loop kernels with import-time backend selection.

The compiled extension (``tactile_bench._kernels``) is used when it was
built; otherwise the numpy/scipy fallback (``_kernels_np``) takes over with
identical semantics.  ``BACKEND`` names the active one.  Both stay
importable so tests and ``benchmarks/bench_kernels.py`` can compare them.

All kernels are deterministic: fixed accumulation order per backend, so
identical inputs give identical outputs.
"""

from __future__ import annotations

import numpy as np

from . import _kernels_np

try:
    from . import _kernels as _native  # type: ignore[attr-defined]
except ImportError:  # extension not built for this install
    _native = None

BACKEND = "native" if _native is not None else "numpy"
_default_impl = _native if _native is not None else _kernels_np


def available_backends() -> tuple[str, ...]:
    return ("native", "numpy") if _native is not None else ("numpy",)


def get_backend(name: str):
    """Return the raw kernel module for ``name`` ('native' or 'numpy')."""
    if name == "numpy":
        return _kernels_np
    if name == "native":
        if _native is None:
            raise ValueError("native kernel extension is not built")
        return _native
    raise ValueError(f"unknown backend {name!r}")


def gaussian_kernel1d(sigma: float, truncate: float = 3.0) -> np.ndarray:
    """Sampled Gaussian, truncated at ``truncate``·sigma, normalized to unit sum."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    radius = int(truncate * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def _as_f64(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=np.float64)


def mean_abs_diff(a: np.ndarray, b: np.ndarray, _impl=None) -> float:
    """Mean absolute difference over all elements of two same-shaped arrays."""
    impl = _default_impl if _impl is None else _impl
    fa = _as_f64(a).ravel()
    fb = _as_f64(b).ravel()
    if fa.shape != fb.shape:
        raise ValueError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")
    return float(impl.mean_abs_diff(fa, fb))


def stack_mean(frames: np.ndarray, _impl=None) -> np.ndarray:
    """Per-element mean over axis 0 of an (n, ...) array, as float64."""
    impl = _default_impl if _impl is None else _impl
    arr = _as_f64(frames)
    flat = arr.reshape(arr.shape[0], -1)
    out = np.empty(flat.shape[1], dtype=np.float64)
    impl.stack_mean(flat, out)
    return out.reshape(arr.shape[1:])


def gaussian_blur(img: np.ndarray, sigma: float, truncate: float = 3.0, _impl=None) -> np.ndarray:
    """Separable Gaussian blur with edge replication on (h, w) or (h, w, c)."""
    impl = _default_impl if _impl is None else _impl
    arr = _as_f64(img)
    w = gaussian_kernel1d(sigma, truncate)
    if arr.ndim == 2:
        planes = arr[..., np.newaxis]
    elif arr.ndim == 3:
        planes = arr
    else:
        raise ValueError(f"expected (h, w) or (h, w, c), got shape {arr.shape}")
    out = np.empty_like(planes)
    tmp = np.empty(planes.shape[:2], dtype=np.float64)
    for c in range(planes.shape[2]):
        plane = np.ascontiguousarray(planes[:, :, c])
        dst = np.empty_like(plane)
        impl.correlate_rows(plane, w, tmp)
        impl.correlate_cols(tmp, w, dst)
        out[:, :, c] = dst
    return out[:, :, 0] if arr.ndim == 2 else out
