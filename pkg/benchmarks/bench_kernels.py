#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The kernels benchmarked here dominate the simulation runtime: the two-sample
ECDF supremum (a two-pointer merge) and the per-period restart scan.  Run
directly:

    python benchmarks/bench_kernels.py

Selecting the numpy path for a whole simulation instead is just
``NSAA_PURE_NUMPY=1 nsaa sweep ...``; this script imports both
implementations side by side regardless of the flag.
"""

import time

import numpy as np

from nsaa import _kernels
from nsaa.detection import candidate_sizes


def time_fn(fn, *args, repeats=5, inner=20):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_ks(n):
    rng = np.random.default_rng(0)
    a = np.sort(rng.uniform(0, 1, n))
    b = np.sort(rng.uniform(0, 1, n))
    rows = []
    t_np = time_fn(_kernels.ks_sorted_numpy, a, b, 0.5, True)
    rows.append(("numpy", t_np))
    if _kernels.ks_sorted_numba is not None:
        _kernels.ks_sorted_numba(a, b, 0.5, True)  # compile
        t_nb = time_fn(_kernels.ks_sorted_numba, a, b, 0.5, True)
        rows.append(("numba", t_nb))
    return rows


def bench_detect_scan(n):
    rng = np.random.default_rng(1)
    values = np.concatenate([rng.uniform(0, 0.5, n // 2), rng.uniform(0.5, 1, n // 2)])
    sorted_left = np.sort(values[:-1])
    sizes = candidate_sizes(n, "geometric")
    log_term = 18.0
    rows = []
    t_np = time_fn(_kernels.detect_scan_numpy, values, sorted_left, sizes,
                   log_term, 0.0, False)
    rows.append(("numpy", t_np))
    if _kernels.detect_scan_numba is not None:
        _kernels.detect_scan_numba(values, sorted_left, sizes, log_term, 0.0, False)
        t_nb = time_fn(_kernels.detect_scan_numba, values, sorted_left, sizes,
                       log_term, 0.0, False)
        rows.append(("numba", t_nb))
    return rows


def main():
    print(f"active backend: {_kernels.backend()}")
    for n in (1_000, 10_000, 100_000):
        print(f"\nks_sorted, two windows of {n:,} points")
        rows = bench_ks(n)
        base = rows[0][1]
        for name, t in rows:
            print(f"  {name:6s} {t * 1e6:10.1f} us   x{base / t:.1f}")
    for n in (1_000, 4_000, 16_000):
        print(f"\ndetect_scan, epoch of {n:,} observations (geometric grid)")
        rows = bench_detect_scan(n)
        base = rows[0][1]
        for name, t in rows:
            print(f"  {name:6s} {t * 1e6:10.1f} us   x{base / t:.1f}")


if __name__ == "__main__":
    main()
