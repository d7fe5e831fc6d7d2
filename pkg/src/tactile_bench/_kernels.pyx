# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops behind tactile_bench.kernels.

Same call contract as the numpy fallback in _kernels_np.py: float64
C-contiguous buffers, caller-allocated outputs.  mean_abs_diff accumulates
with Neumaier compensation in fixed row-major order, so results are
bit-reproducible and exact for integer-valued frames.
"""

from libc.math cimport fabs


def mean_abs_diff(const double[::1] a, const double[::1] b):
    """Mean of |a - b| over two equally sized flat arrays."""
    cdef Py_ssize_t i, n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("mean_abs_diff: size mismatch")
    if n == 0:
        raise ValueError("mean_abs_diff: empty input")
    cdef double s = 0.0, comp = 0.0, t, x
    for i in range(n):
        x = fabs(a[i] - b[i])
        t = s + x
        if fabs(s) >= fabs(x):
            comp += (s - t) + x
        else:
            comp += (x - t) + s
        s = t
    return (s + comp) / <double> n


def stack_mean(const double[:, ::1] stack, double[::1] out):
    """Mean over axis 0 of (n, p) into out (p,).

    True division at the end (not multiplication by the reciprocal), so
    integer-valued stacks average exactly.
    """
    cdef Py_ssize_t n = stack.shape[0], p = stack.shape[1], i, j
    if out.shape[0] != p:
        raise ValueError("stack_mean: output size mismatch")
    if n == 0:
        raise ValueError("stack_mean: empty stack")
    cdef double dn = <double> n
    for j in range(p):
        out[j] = stack[0, j]
    for i in range(1, n):
        for j in range(p):
            out[j] += stack[i, j]
    for j in range(p):
        out[j] /= dn


def correlate_rows(const double[:, ::1] src, const double[::1] w, double[:, ::1] dst):
    """1-D correlation along axis 1 with edge replication.

    The kernel is assumed symmetric (Gaussian), so interior pixels pair the
    left and right taps: acc = w[r]*x[j] + sum_t w[r+t]*(x[j-t] + x[j+t]).
    """
    cdef Py_ssize_t h = src.shape[0], n = src.shape[1], k = w.shape[0]
    cdef Py_ssize_t r = k // 2
    cdef Py_ssize_t i, j, t, idx, lo, hi
    cdef double acc
    if dst.shape[0] != h or dst.shape[1] != n:
        raise ValueError("correlate_rows: output shape mismatch")
    lo = r if r < n else n
    hi = n - r if n - r > lo else lo
    for i in range(h):
        for j in range(lo):
            acc = 0.0
            for t in range(k):
                idx = j + t - r
                if idx < 0:
                    idx = 0
                elif idx >= n:
                    idx = n - 1
                acc += w[t] * src[i, idx]
            dst[i, j] = acc
        for j in range(lo, hi):
            acc = w[r] * src[i, j]
            for t in range(1, r + 1):
                acc += w[r + t] * (src[i, j - t] + src[i, j + t])
            dst[i, j] = acc
        for j in range(hi, n):
            acc = 0.0
            for t in range(k):
                idx = j + t - r
                if idx < 0:
                    idx = 0
                elif idx >= n:
                    idx = n - 1
                acc += w[t] * src[i, idx]
            dst[i, j] = acc


def correlate_cols(const double[:, ::1] src, const double[::1] w, double[:, ::1] dst):
    """1-D correlation along axis 0 with edge replication.

    Works row-wise for cache friendliness, pairing the rows above and below
    via kernel symmetry: dst[i,:] = w[r]*src[i,:] + sum_t w[r+t]*(src[i-t,:]
    + src[i+t,:]) with clamped row indices.
    """
    cdef Py_ssize_t h = src.shape[0], n = src.shape[1], k = w.shape[0]
    cdef Py_ssize_t r = k // 2
    cdef Py_ssize_t i, j, t, up, down
    cdef double wt, w0
    if dst.shape[0] != h or dst.shape[1] != n:
        raise ValueError("correlate_cols: output shape mismatch")
    w0 = w[r]
    for i in range(h):
        for j in range(n):
            dst[i, j] = w0 * src[i, j]
        for t in range(1, r + 1):
            up = i - t
            if up < 0:
                up = 0
            down = i + t
            if down >= h:
                down = h - 1
            wt = w[r + t]
            for j in range(n):
                dst[i, j] += wt * (src[up, j] + src[down, j])
