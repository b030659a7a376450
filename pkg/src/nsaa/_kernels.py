"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The two-sample ECDF supremum and the per-period restart scan dominate the
runtime of long simulations, so both get loop implementations compiled with
``numba.njit``.  Setting the environment variable ``NSAA_PURE_NUMPY=1``
(or running without numba installed) selects vectorized numpy versions of
the same kernels instead; ``benchmarks/bench_kernels.py`` compares the two.

Both implementations are importable under explicit names (``*_numba`` /
``*_numpy``) so tests and the benchmark can cross-check them regardless of
which one the package-level aliases point at.
"""

from __future__ import annotations

import math
import os

import numpy as np

PURE_NUMPY = os.environ.get("NSAA_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes")

if not PURE_NUMPY:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False
else:
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# Two-sample ECDF supremum distance
# ---------------------------------------------------------------------------

def _ks_sorted_loop(a, b, cap, use_cap):
    # a, b sorted ascending; ECDFs use <= (right-continuous).  The supremum
    # of |F_a - F_b| over the reals is attained at pooled sample points; with
    # a cap only pooled points <= cap are admissible.
    na = a.shape[0]
    nb = b.shape[0]
    i = 0
    j = 0
    best = 0.0
    while i < na or j < nb:
        if i < na and (j >= nb or a[i] <= b[j]):
            y = a[i]
        else:
            y = b[j]
        if use_cap and y > cap:
            break
        while i < na and a[i] <= y:
            i += 1
        while j < nb and b[j] <= y:
            j += 1
        d = abs(i / na - j / nb)
        if d > best:
            best = d
    return best


def ks_sorted_numpy(a, b, cap=0.0, use_cap=False):
    """Vectorized equivalent of the merge loop above."""
    pooled = np.unique(np.concatenate((a, b)))
    if use_cap:
        pooled = pooled[pooled <= cap]
    if pooled.size == 0:
        return 0.0
    fa = np.searchsorted(a, pooled, side="right") / a.shape[0]
    fb = np.searchsorted(b, pooled, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# Restart scan: compare the epoch prefix against trailing windows
# ---------------------------------------------------------------------------
#
# ``values`` holds the epoch's observations in arrival order, the newest one
# included (n = t - l + 1).  ``sorted_left`` is values[:n-1] sorted.  For each
# candidate right-window size k (descending, so the earliest split wins), the
# scan fires when
#
#     sup_y |F_left(y) - F_right(y)| > 2*sqrt(L/(n-1)) + 2*sqrt(L/k)
#
# with L = ln(2 T^2 / delta).  Returns the firing k, or 0.

def _make_detect_scan(ks_fn):
    def detect_scan(values, sorted_left, sizes, log_term, cap, use_cap):
        n = values.shape[0]
        r_left = 2.0 * math.sqrt(log_term / (n - 1))
        for idx in range(sizes.shape[0]):
            k = sizes[idx]
            if k >= n:
                # right window == epoch: the two ECDFs differ by at most 1/n,
                # always below the threshold
                continue
            thr = r_left + 2.0 * math.sqrt(log_term / k)
            if thr >= 1.0:
                # KS <= 1 can never exceed this; smaller k only raises thr
                break
            right = np.sort(values[n - k:])
            if ks_fn(sorted_left, right, cap, use_cap) > thr:
                return k
        return 0

    return detect_scan


detect_scan_numpy = _make_detect_scan(ks_sorted_numpy)

if HAS_NUMBA:
    ks_sorted_numba = njit(cache=True)(_ks_sorted_loop)
    detect_scan_numba = njit(cache=True)(_make_detect_scan(ks_sorted_numba))
    ks_sorted = ks_sorted_numba
    detect_scan = detect_scan_numba
else:
    ks_sorted_numba = None
    detect_scan_numba = None
    ks_sorted = ks_sorted_numpy
    detect_scan = detect_scan_numpy


def backend() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if HAS_NUMBA else "numpy"


def warmup() -> None:
    """Trigger JIT compilation so timing loops and forked workers start hot."""
    a = np.array([0.1, 0.5, 0.9])
    b = np.array([0.2, 0.6])
    ks_sorted(a, b, 0.5, True)
    detect_scan(np.array([0.1, 0.2, 0.9, 0.8]), np.array([0.1, 0.2, 0.9]),
                np.array([4, 2, 1], dtype=np.int64), 10.0, 0.0, False)
