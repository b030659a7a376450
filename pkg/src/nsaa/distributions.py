"""Ground-truth demand models on [0, xbar] and nonstationary sequence generators.

Every distribution used here is either piecewise-constant density or a finite
set of point masses, which keeps CDFs, quantiles, total-variation distances
and expected newsvendor costs exactly computable (no Monte Carlo anywhere in
the evaluation path).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-12
EQ_TOL = 1e-12

PIECEWISE = "piecewise-density"
DISCRETE = "discrete"


@dataclass(frozen=True, eq=False)
class DemandModel:
    """One demand distribution supported on [0, xbar].

    For ``kind="piecewise-density"`` the breakpoints are the m+1 cell edges
    and ``values`` the m density levels; for ``kind="discrete"`` breakpoints
    are the atom locations and ``values`` their masses.  Models are immutable
    and safe to share across runs.
    """

    kind: str
    breakpoints: np.ndarray
    values: np.ndarray
    xbar: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if self.kind not in (PIECEWISE, DISCRETE):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.xbar <= 0 or not np.isfinite(self.xbar):
            raise ValueError("xbar must be a positive finite bound")
        if bp.size == 0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly ascending and nonempty")
        if bp[0] < -MASS_TOL or bp[-1] > self.xbar + MASS_TOL:
            raise ValueError("support must lie inside [0, xbar]")
        if np.any(vals < 0):
            raise ValueError("density levels / point masses must be nonnegative")
        if self.kind == PIECEWISE:
            if vals.size != bp.size - 1:
                raise ValueError("piecewise model needs len(values) == len(breakpoints) - 1")
            mass = float(np.sum(vals * np.diff(bp)))
        else:
            if vals.size != bp.size:
                raise ValueError("discrete model needs one mass per atom")
            mass = float(np.sum(vals))
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"total mass {mass} is not 1")
        # Cumulative mass at each breakpoint / atom, used by cdf and quantile.
        if self.kind == PIECEWISE:
            cum = np.concatenate(([0.0], np.cumsum(vals * np.diff(bp))))
        else:
            cum = np.cumsum(vals)
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)

    # -- basic queries -----------------------------------------------------

    def cdf(self, y: float) -> float:
        """Right-continuous P[D <= y]."""
        bp = self.breakpoints
        if y < bp[0]:
            return 0.0
        if self.kind == PIECEWISE:
            if y >= bp[-1]:
                return 1.0
            i = int(np.searchsorted(bp, y, side="right")) - 1
            return float(self._cum[i] + self.values[i] * (y - bp[i]))
        i = int(np.searchsorted(bp, y, side="right"))
        return float(self._cum[i - 1]) if i > 0 else 0.0

    def quantile(self, p: float) -> float:
        """Smallest x with cdf(x) >= p; p=0 maps to the bottom of the support."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"quantile level {p} outside [0, 1]")
        bp = self.breakpoints
        if self.kind == DISCRETE:
            i = int(np.searchsorted(self._cum, p - MASS_TOL, side="left"))
            return float(bp[min(i, bp.size - 1)])
        if p <= 0.0:
            return float(bp[0])
        i = int(np.searchsorted(self._cum, p - MASS_TOL, side="left"))
        i = min(max(i, 1), bp.size - 1)
        dens = self.values[i - 1]
        if dens <= 0.0:
            # flat stretch: the smallest x attaining p is the cell's right edge
            return float(bp[i]) if p > self._cum[i - 1] else float(bp[i - 1])
        x = bp[i - 1] + (p - self._cum[i - 1]) / dens
        return float(min(max(x, bp[i - 1]), bp[i]))

    def mean(self) -> float:
        bp, v = self.breakpoints, self.values
        if self.kind == PIECEWISE:
            return float(np.sum(v * (bp[1:] ** 2 - bp[:-1] ** 2) / 2.0))
        return float(np.sum(v * bp))

    def second_moment(self) -> float:
        bp, v = self.breakpoints, self.values
        if self.kind == PIECEWISE:
            return float(np.sum(v * (bp[1:] ** 3 - bp[:-1] ** 3) / 3.0))
        return float(np.sum(v * bp**2))

    def integrated_cdf(self, x: float) -> float:
        """Exact integral of the CDF from -inf to x, i.e. E[(x - D)^+]."""
        bp = self.breakpoints
        if x <= bp[0]:
            return 0.0
        if self.kind == PIECEWISE:
            total = 0.0
            for i in range(self.values.size):
                lo, hi = bp[i], bp[i + 1]
                if x <= lo:
                    break
                seg = min(x, hi) - lo
                # trapezoid under the linear CDF piece
                total += self._cum[i] * seg + 0.5 * self.values[i] * seg**2
            if x > bp[-1]:
                total += x - bp[-1]
            return float(total)
        return float(np.sum(self.values * np.maximum(x - bp, 0.0)))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Inverse-CDF draw(s); one uniform variate per draw."""
        if size is None:
            return self.quantile(float(rng.random()))
        return self.quantile_vec(rng.random(size))

    def quantile_vec(self, p: np.ndarray) -> np.ndarray:
        """Vectorized quantile; same convention as :meth:`quantile`."""
        p = np.asarray(p, dtype=np.float64)
        bp = self.breakpoints
        if self.kind == DISCRETE:
            idx = np.searchsorted(self._cum, p - MASS_TOL, side="left")
            return bp[np.minimum(idx, bp.size - 1)]
        idx = np.clip(np.searchsorted(self._cum, p - MASS_TOL, side="left"), 1, bp.size - 1)
        dens = self.values[idx - 1]
        lo = bp[idx - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = lo + (p - self._cum[idx - 1]) / dens
        x = np.where(dens > 0.0, x, bp[idx])
        return np.clip(x, lo, bp[idx])

    # -- structural equality -----------------------------------------------

    def canonical(self) -> tuple:
        bp, v = self.breakpoints, self.values
        if self.kind == PIECEWISE:
            cb = [float(bp[0])]
            cv: list[float] = []
            for i in range(v.size):
                if cv and abs(v[i] - cv[-1]) <= EQ_TOL:
                    cb[-1] = float(bp[i + 1])
                else:
                    cv.append(float(v[i]))
                    cb.append(float(bp[i + 1]))
            return (PIECEWISE, tuple(cb), tuple(cv))
        keep = v > EQ_TOL
        return (DISCRETE, tuple(bp[keep].tolist()), tuple(v[keep].tolist()))

    def structurally_equal(self, other: "DemandModel") -> bool:
        if self is other:
            return True
        if self.kind != other.kind or abs(self.xbar - other.xbar) > EQ_TOL:
            return False
        ka, ba, va = self.canonical()
        kb, bb, vb = other.canonical()
        if len(ba) != len(bb):
            return False
        return (
            max((abs(x - y) for x, y in zip(ba, bb)), default=0.0) <= EQ_TOL
            and max((abs(x - y) for x, y in zip(va, vb)), default=0.0) <= EQ_TOL
        )


def uniform_model(lo: float, hi: float, xbar: float | None = None) -> DemandModel:
    """Uniform density on [lo, hi]."""
    if xbar is None:
        xbar = hi
    return DemandModel(PIECEWISE, np.array([lo, hi]), np.array([1.0 / (hi - lo)]), xbar)


def point_mass(at: float, xbar: float | None = None) -> DemandModel:
    if xbar is None:
        xbar = max(at, 1.0)
    return DemandModel(DISCRETE, np.array([at]), np.array([1.0]), xbar)


# ---------------------------------------------------------------------------
# Distances and budgets
# ---------------------------------------------------------------------------

def tv_distance(a: DemandModel, b: DemandModel) -> float:
    """Total variation with the factor-1/2 convention, exact."""
    if abs(a.xbar - b.xbar) > EQ_TOL:
        raise ValueError("models must share the same xbar")
    if a.kind != b.kind:
        # a continuous and a discrete law are mutually singular
        return 1.0
    if a.kind == DISCRETE:
        atoms = np.unique(np.concatenate((a.breakpoints, b.breakpoints)))
        pa = np.zeros_like(atoms)
        pb = np.zeros_like(atoms)
        pa[np.searchsorted(atoms, a.breakpoints)] = a.values
        pb[np.searchsorted(atoms, b.breakpoints)] = b.values
        return float(0.5 * np.sum(np.abs(pa - pb)))
    edges = np.unique(np.concatenate((a.breakpoints, b.breakpoints)))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += abs(_density_at(a, lo) - _density_at(b, lo)) * (hi - lo)
    return float(0.5 * total)


def _density_at(m: DemandModel, y: float) -> float:
    bp = m.breakpoints
    if y < bp[0] or y >= bp[-1]:
        return 0.0
    i = int(np.searchsorted(bp, y, side="right")) - 1
    return float(m.values[i])


@dataclass(frozen=True)
class BudgetReport:
    switches: int
    variation: float


@dataclass(frozen=True, eq=False)
class DemandSequence:
    """Per-period demand models over a horizon of T periods."""

    models: list[DemandModel]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.models) < 1:
            raise ValueError("a demand sequence needs at least one period")
        xbar = self.models[0].xbar
        if any(abs(m.xbar - xbar) > EQ_TOL for m in self.models):
            raise ValueError("all models in a sequence must share xbar")

    @property
    def T(self) -> int:
        return len(self.models)

    @property
    def xbar(self) -> float:
        return self.models[0].xbar


def sequence_budgets(seq: DemandSequence) -> BudgetReport:
    """Switch count (structural inequality) and summed TV of consecutive pairs."""
    switches = 0
    variation = 0.0
    for prev, cur in zip(seq.models[:-1], seq.models[1:]):
        if not cur.structurally_equal(prev):
            switches += 1
            variation += tv_distance(prev, cur)
    return BudgetReport(switches=switches, variation=variation)


# ---------------------------------------------------------------------------
# Hard-instance generators
# ---------------------------------------------------------------------------

EPS_MAX = 0.25
EPS_CLAMP = 0.249

HARD_KINDS = ("switch", "drift", "separated-switch", "separated-drift")


def _two_bump_pair(eps: float) -> tuple[DemandModel, DemandModel, float]:
    """General-distribution pair on [0, 4]: 1/2 +- eps on [0,1), gap, mirrored tail."""
    bp = np.array([0.0, 1.0, 3.0, 4.0])
    da = DemandModel(PIECEWISE, bp, np.array([0.5 + eps, 0.0, 0.5 - eps]), 4.0)
    db = DemandModel(PIECEWISE, bp, np.array([0.5 - eps, 0.0, 0.5 + eps]), 4.0)
    return da, db, 4.0


def _separated_pair(eps: float) -> tuple[DemandModel, DemandModel, float]:
    """Separated pair on [0, 2]: density >= 1/2 - eps everywhere, so the
    expected newsvendor cost is strongly convex with modulus alpha = 1/2 - eps."""
    bp = np.array([0.0, 1.0, 2.0])
    da = DemandModel(PIECEWISE, bp, np.array([0.5 + eps, 0.5 - eps]), 2.0)
    db = DemandModel(PIECEWISE, bp, np.array([0.5 - eps, 0.5 + eps]), 2.0)
    return da, db, 2.0


def make_hard_instance(
    kind: str,
    T: int,
    budget: float,
    rng: np.random.Generator,
    epsilon: float | None = None,
    clamp: bool = True,
) -> DemandSequence:
    """Batched two-distribution instance meeting a switch or variation budget.

    The horizon is split into batches of length Delta_T; within each batch the
    law is constant and a fair coin picks D_a or D_b.  Switch budgets use
    Delta_T = ceil(T/S) with eps = 1/sqrt(Delta_T); variation budgets use
    Delta_T = ceil((T/V)^(2/3)) with eps = 1/(4 sqrt(Delta_T)).  ``epsilon``
    overrides the schedule (used to pin the separation constant).
    """
    if kind not in HARD_KINDS:
        raise ValueError(f"unknown instance kind {kind!r}")
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if budget <= 0:
        raise ValueError("budget must be positive")

    if kind.endswith("switch"):
        delta_t = -(-T // int(budget)) if budget >= 1 else T
    else:
        delta_t = int(math.ceil((T / budget) ** (2.0 / 3.0) - 1e-9))
    delta_t = max(delta_t, 1)

    if epsilon is None:
        eps = 1.0 / math.sqrt(delta_t) if kind.endswith("switch") else 1.0 / (4.0 * math.sqrt(delta_t))
    else:
        eps = float(epsilon)

    clamped = False
    if not 0.0 < eps < EPS_MAX:
        if not clamp:
            raise ValueError(f"epsilon {eps} outside (0, {EPS_MAX}) and clamping disabled")
        eps = EPS_CLAMP
        clamped = True

    if kind.startswith("separated"):
        da, db, _ = _separated_pair(eps)
    else:
        da, db, _ = _two_bump_pair(eps)

    n_batches = -(-T // delta_t)
    coins = rng.integers(0, 2, size=n_batches)
    models: list[DemandModel] = []
    for i in range(n_batches):
        m = da if coins[i] == 0 else db
        models.extend([m] * min(delta_t, T - len(models)))
    meta = {
        "kind": kind,
        "budget": budget,
        "delta_t": delta_t,
        "epsilon": eps,
        "clamped": clamped,
    }
    return DemandSequence(models=models[:T], meta=meta)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def sequence_to_json(seq: DemandSequence) -> str:
    payload = {
        "xbar": seq.xbar,
        "periods": [
            {
                "kind": m.kind,
                "breakpoints": m.breakpoints.tolist(),
                "values": m.values.tolist(),
            }
            for m in seq.models
        ],
    }
    return json.dumps(payload)


def sequence_from_json(text: str) -> DemandSequence:
    payload = json.loads(text)
    xbar = float(payload["xbar"])
    models = [
        DemandModel(
            p["kind"],
            np.asarray(p["breakpoints"], dtype=np.float64),
            np.asarray(p["values"], dtype=np.float64),
            xbar,
        )
        for p in payload["periods"]
    ]
    return DemandSequence(models=models)
