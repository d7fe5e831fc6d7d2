"""numpy/scipy fallback for the compiled kernels in _kernels.pyx.

Drop-in replacement: same functions, same float64 C-contiguous call
contract.  Used when the extension was not built for this install.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def mean_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError("mean_abs_diff: size mismatch")
    if a.size == 0:
        raise ValueError("mean_abs_diff: empty input")
    return float(np.mean(np.abs(a - b)))


def stack_mean(stack: np.ndarray, out: np.ndarray) -> None:
    if stack.shape[0] == 0:
        raise ValueError("stack_mean: empty stack")
    if out.shape != stack.shape[1:]:
        raise ValueError("stack_mean: output size mismatch")
    np.mean(stack, axis=0, out=out)


def correlate_rows(src: np.ndarray, w: np.ndarray, dst: np.ndarray) -> None:
    if dst.shape != src.shape:
        raise ValueError("correlate_rows: output shape mismatch")
    ndimage.correlate1d(src, w, axis=1, output=dst, mode="nearest")


def correlate_cols(src: np.ndarray, w: np.ndarray, dst: np.ndarray) -> None:
    if dst.shape != src.shape:
        raise ValueError("correlate_cols: output shape mismatch")
    ndimage.correlate1d(src, w, axis=0, output=dst, mode="nearest")
