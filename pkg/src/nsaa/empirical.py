"""Incremental empirical CDFs, two-window KS distances, and DKW radii."""

from __future__ import annotations

import math

import numpy as np

from . import _kernels


class SampleWindow:
    """Append-only observation window keeping arrival and sorted order.

    Appending costs one binary search plus an O(n) memmove in the sorted
    buffer; both buffers double when full.  Windows are single-writer, and
    readers are safe between appends.
    """

    __slots__ = ("_arr", "_sorted", "_n", "start")

    def __init__(self, start: int = 1, values=()):
        self._arr = np.empty(64, dtype=np.float64)
        self._sorted = np.empty(64, dtype=np.float64)
        self._n = 0
        self.start = start
        for v in values:
            self.append(float(v))

    def __len__(self) -> int:
        return self._n

    @property
    def end(self) -> int:
        return self.start + self._n - 1

    @property
    def values(self) -> np.ndarray:
        """Observations in arrival order (read-only view)."""
        return self._arr[: self._n]

    @property
    def sorted_values(self) -> np.ndarray:
        return self._sorted[: self._n]

    def append(self, v: float) -> None:
        n = self._n
        if n == self._arr.shape[0]:
            self._arr = np.resize(self._arr, 2 * n)
            self._sorted = np.resize(self._sorted, 2 * n)
        self._arr[n] = v
        pos = int(np.searchsorted(self._sorted[:n], v, side="right"))
        self._sorted[pos + 1 : n + 1] = self._sorted[pos:n]
        self._sorted[pos] = v
        self._n = n + 1

    def ecdf(self, y: float) -> float:
        """Fraction of observations <= y (right-continuous step function)."""
        if self._n == 0:
            raise ValueError("ecdf of an empty window is undefined")
        return int(np.searchsorted(self._sorted[: self._n], y, side="right")) / self._n


def ecdf(window: SampleWindow, y: float) -> float:
    return window.ecdf(y)


def ks_distance(a: SampleWindow, b: SampleWindow, y_max: float | None = None) -> float:
    """Exact sup_y |F_a(y) - F_b(y)|, restricted to y <= y_max when given.

    The supremum only needs checking at pooled sample points, which the
    merge kernel does in O(n_a + n_b).
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("KS distance needs two nonempty windows")
    use_cap = y_max is not None
    cap = float(y_max) if use_cap else 0.0
    return float(_kernels.ks_sorted(a.sorted_values, b.sorted_values, cap, use_cap))


def dkw_radius(n: int, T: int, delta: float) -> float:
    """Uniform ECDF confidence radius sqrt(ln(2 T^2 / delta) / n).

    The T^2 factor is the union bound over every window [s, t] tested during
    a horizon of T periods.
    """
    if n < 1 or T < 1:
        raise ValueError("n and T must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(math.log(2.0 * T * T / delta) / n)
