#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the numpy/scipy fallback.

Times the three hot loops (wear-metric accumulation, stack averaging, the
separable Gaussian behind the bandpass) on sensor-sized frames and prints a
table with the speedup of the native build.

    python benchmarks/bench_kernels.py [--size WxH] [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tactile_bench import kernels


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", default="320x240", help="frame size WxH")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--stack", type=int, default=10, help="frames per stack")
    args = parser.parse_args(argv)
    w, h = (int(v) for v in args.size.lower().split("x"))

    rng = np.random.default_rng(0)
    a = rng.integers(0, 256, (h, w, 3)).astype(np.float64)
    b = rng.integers(0, 256, (h, w, 3)).astype(np.float64)
    stack = rng.normal(120, 20, (args.stack, h, w, 3))
    img = rng.normal(120, 20, (h, w, 3))

    cases = {
        "mean_abs_diff": lambda impl: kernels.mean_abs_diff(a, b, _impl=impl),
        f"stack_mean (n={args.stack})": lambda impl: kernels.stack_mean(stack, _impl=impl),
        "gaussian_blur (sigma=12)": lambda impl: kernels.gaussian_blur(img, 12.0, _impl=impl),
    }

    backends = kernels.available_backends()
    print(f"frame {w}x{h}x3, best of {args.repeats} runs; active backend: {kernels.BACKEND}")
    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, call in cases.items():
        times = {}
        for name in backends:
            impl = kernels.get_backend(name)
            call(impl)  # warm up
            times[name] = _time(lambda: call(impl), args.repeats)
        row = f"{label:<28}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "native" in times and "numpy" in times:
            row += f"{times['numpy'] / times['native']:>9.2f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
