"""Inner losses, subgradients, and exact empirical optimization oracles.

All oracles return the smallest minimizer of the empirical objective, so
repeated runs replay exactly.  The linear and quadratic oracles solve their
problems in closed form (accuracy 0); the first-price auction objective is
piecewise linear, so enumerating piece endpoints is exact as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirical import SampleWindow


@dataclass(frozen=True)
class LinearNewsvendor:
    """F(x, d) = h (x - d)^+ + b (d - x)^+ with unit overage/underage costs."""

    h: float
    b: float

    def __post_init__(self):
        if self.h < 0 or self.b < 0 or self.h + self.b <= 0:
            raise ValueError("need h >= 0, b >= 0 and h + b > 0")

    kind = "linear"

    @property
    def fractile(self) -> float:
        return self.b / (self.h + self.b)


@dataclass(frozen=True)
class QuadraticLoss:
    """F(x, d) = a (x - d)^2."""

    a: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("curvature a must be positive")

    kind = "quadratic"


@dataclass(frozen=True)
class AuctionLoss:
    """First-price auction disutility F(x, d) = (x - v) * 1[x >= d]."""

    v: float

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise ValueError("private value v must lie in [0, 1]")

    kind = "auction"


InnerLoss = LinearNewsvendor | QuadraticLoss | AuctionLoss


def loss_eval(loss: InnerLoss, x: float, d: float) -> float:
    if isinstance(loss, LinearNewsvendor):
        return loss.h * max(x - d, 0.0) + loss.b * max(d - x, 0.0)
    if isinstance(loss, QuadraticLoss):
        return loss.a * (x - d) ** 2
    return (x - loss.v) if x >= d else 0.0


def loss_subgrad(loss: InnerLoss, x: float, d: float) -> float:
    """Subgradient in x; at the linear kink x == d the right derivative h is used."""
    if isinstance(loss, LinearNewsvendor):
        return float(loss.h) if x >= d else -float(loss.b)
    if isinstance(loss, QuadraticLoss):
        return 2.0 * loss.a * (x - d)
    raise ValueError("the auction loss has no usable subgradient "
                     "(discontinuous integrand)")


def ghat(samples: SampleWindow, x: float, h: float, b: float) -> float:
    """Empirical gradient proxy (h + b) * Fhat(x) - b."""
    return (h + b) * samples.ecdf(x) - b


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------

def quantile_oracle(samples: SampleWindow, h: float, b: float) -> float:
    """Smallest empirical b/(h+b)-quantile; exact minimizer of the empirical
    newsvendor cost, ties broken toward the smallest sample value."""
    n = len(samples)
    if n == 0:
        raise ValueError("quantile oracle needs a nonempty window")
    fractile = b / (h + b)
    i = int(math.ceil(n * fractile - 1e-12))
    i = min(max(i, 1), n)
    return float(samples.sorted_values[i - 1])


def mean_oracle(samples: SampleWindow, xbar: float) -> float:
    """Sample mean clipped to [0, xbar]; exact minimizer of the empirical
    quadratic cost over the decision domain."""
    if len(samples) == 0:
        raise ValueError("mean oracle needs a nonempty window")
    return float(min(max(np.mean(samples.values), 0.0), xbar))


def breakpoint_oracle(samples: SampleWindow, v: float) -> float:
    """Minimizer of (1/n) sum (x - v) 1[x >= d_k] over {0} union samples.

    The empirical objective is piecewise linear with knots at the samples,
    so checking piece endpoints is exact; ties return the smallest bid.
    """
    n = len(samples)
    if n == 0:
        raise ValueError("breakpoint oracle needs a nonempty window")
    sv = samples.sorted_values
    cand = np.concatenate(([0.0], sv))
    counts = np.searchsorted(sv, cand, side="right")
    obj = (cand - v) * counts / n
    return float(cand[int(np.argmin(obj))])


class ExactOracle:
    """Stateless oracle dispatching to the closed-form solver for each loss."""

    def reset(self) -> None:
        pass

    def observe(self, d: float) -> None:
        pass

    def solve(self, samples: SampleWindow, loss: InnerLoss, xbar: float) -> tuple[float, float]:
        if isinstance(loss, LinearNewsvendor):
            return quantile_oracle(samples, loss.h, loss.b), 0.0
        if isinstance(loss, QuadraticLoss):
            return mean_oracle(samples, xbar), 0.0
        return breakpoint_oracle(samples, loss.v), 0.0


class OgdOracle:
    """Online-gradient-descent oracle for convex losses.

    Keeps an iterate updated with step size xbar / sqrt(k) at inner step k
    and answers with the average of past iterates; the reported accuracy is
    the standard average-iterate bound O(G * xbar / sqrt(k)).  Useful as a
    generic oracle when no closed form is available; the exact oracles above
    dominate it whenever they apply.
    """

    def __init__(self, loss: InnerLoss, xbar: float):
        if isinstance(loss, AuctionLoss):
            raise ValueError("OGD needs a subgradient; the auction loss has none")
        self.loss = loss
        self.xbar = xbar
        self.reset()

    def _grad_bound(self) -> float:
        if isinstance(self.loss, LinearNewsvendor):
            return max(self.loss.h, self.loss.b)
        return 2.0 * self.loss.a * self.xbar

    def reset(self) -> None:
        self._y = 0.5 * self.xbar
        self._sum = 0.0
        self._k = 0

    def observe(self, d: float) -> None:
        self._k += 1
        self._sum += self._y
        step = self.xbar / math.sqrt(self._k)
        g = loss_subgrad(self.loss, self._y, d)
        self._y = min(max(self._y - step * g, 0.0), self.xbar)

    def solve(self, samples: SampleWindow, loss: InnerLoss, xbar: float) -> tuple[float, float]:
        if self._k == 0:
            raise ValueError("OGD oracle has seen no data")
        eps = 1.5 * self._grad_bound() * self.xbar / math.sqrt(self._k)
        return self._sum / self._k, eps


ORACLES = {
    "quantile": ExactOracle,
    "mean": ExactOracle,
    "breakpoint": ExactOracle,
    "exact": ExactOracle,
    "ogd": OgdOracle,
}
