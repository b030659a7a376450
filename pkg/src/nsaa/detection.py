"""Restart test: scan candidate splits of an epoch for a distribution change.

At period t the epoch window spans periods [l, t].  For a candidate split s,
the left window holds periods [l, t-1] and the right window [s, t]; the test
fires when the exact two-window KS distance exceeds

    2 * dkw_radius(t - l, T, delta) + 2 * dkw_radius(t - s + 1, T, delta).

The windows overlap for s < t; the test is applied as stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .empirical import SampleWindow

ALL = "all"
GEOMETRIC = "geometric"


@dataclass(frozen=True)
class DetectionConfig:
    delta: float
    T: int
    candidate_strategy: str = GEOMETRIC
    y_max_mode: str = "unrestricted"

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.T < 1:
            raise ValueError("horizon T must be >= 1")
        if self.candidate_strategy not in (ALL, GEOMETRIC):
            raise ValueError(f"unknown candidate strategy {self.candidate_strategy!r}")
        if self.y_max_mode not in ("unrestricted", "capped"):
            raise ValueError(f"unknown y_max mode {self.y_max_mode!r}")

    @property
    def log_term(self) -> float:
        return math.log(2.0 * self.T * self.T / self.delta)


def candidate_sizes(n: int, strategy: str) -> np.ndarray:
    """Right-window sizes to test, in descending order (smallest s first).

    ``all`` scans every split; ``geometric`` tests sizes {1, 2, 4, ...} plus
    the full window, i.e. splits {t, t-1, t-3, t-7, ..., l}.  The geometric
    set costs O(log n) tests per period and delays detection by at most a
    constant factor, since it always contains a window within 2x of any size.
    """
    if strategy == ALL:
        return np.arange(n, 0, -1, dtype=np.int64)
    sizes = [n]
    k = 1
    while k < n:
        sizes.append(k)
        k *= 2
    return np.unique(np.asarray(sizes, dtype=np.int64))[::-1].copy()


def detect(epoch: SampleWindow, cfg: DetectionConfig, y_max: float | None = None) -> int | None:
    """Return the smallest firing split period s, or None.

    ``epoch`` must span [l, t] with at least two observations (the left
    window [l, t-1] is nonempty).  When several candidates fire the smallest
    s wins, which makes replays deterministic.
    """
    n = len(epoch)
    if n < 2:
        raise ValueError("detection needs an epoch of at least two periods")
    if cfg.y_max_mode == "capped" and y_max is None:
        raise ValueError("capped detection requires a y_max value")
    use_cap = y_max is not None
    cap = float(y_max) if use_cap else 0.0

    values = epoch.values
    # left window = everything but the newest arrival; drop that one value
    # from the incrementally maintained sorted buffer instead of re-sorting
    sorted_all = epoch.sorted_values
    pos = int(np.searchsorted(sorted_all, values[n - 1], side="left"))
    sorted_left = np.delete(sorted_all, pos)

    sizes = candidate_sizes(n, cfg.candidate_strategy)
    fired = int(_kernels.detect_scan(values, sorted_left, sizes, cfg.log_term, cap, use_cap))
    if fired == 0:
        return None
    return epoch.start + (n - fired)
