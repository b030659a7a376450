"""Online ordering policies.

Epoch-based policies carry out the detection-and-restart loop: decide from
the current epoch's data, observe, test every candidate split of the epoch
for a distribution change, and on a firing discard the epoch (including the
triggering observation) and restart at t + 1.  Baselines (SAA and its
moving-window / periodic-restart variants) never restart adaptively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detection import GEOMETRIC, DetectionConfig, detect
from .empirical import SampleWindow, dkw_radius
from .losses import (
    AuctionLoss,
    ExactOracle,
    InnerLoss,
    LinearNewsvendor,
    OgdOracle,
    QuadraticLoss,
    quantile_oracle,
)

FULL = "full"
CENSORED = "censored"


@dataclass
class Observation:
    """One period's feedback: the full demand, or the sale under censoring.

    ``lost_sale`` is only meaningful for censored observations of discrete
    demand, where it reveals whether a strict stockout occurred when the sale
    equals the order level.
    """

    value: float
    censored: bool = False
    lost_sale: bool | None = None


@dataclass
class PolicyState:
    """Epoch bookkeeping shared by the detection-and-restart policies."""

    epoch: int
    epoch_start: int
    window: SampleWindow
    rng: np.random.Generator


class Policy:
    """Common interface: start(T, xbar, rng), then decide / observe per period."""

    policy_id = "policy"
    channel = FULL

    def start(self, T: int, xbar: float, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def decide(self, t: int) -> float:
        raise NotImplementedError

    def observe(self, t: int, obs: Observation) -> bool:
        """Consume the period's feedback; returns True when an epoch restarts."""
        raise NotImplementedError

    @property
    def epoch_index(self) -> int:
        return 1


# ---------------------------------------------------------------------------
# Uncensored detection-and-restart policies
# ---------------------------------------------------------------------------

class GeneralNsaa(Policy):
    """Detection-and-restart SAA with a pluggable loss and optimization oracle.

    At an epoch's first period the decision is uniform on [0, xbar]; later
    periods ask the oracle for a minimizer of the empirical loss over the
    epoch's data.  The per-period oracle accuracy is recorded in
    ``eps_schedule``.
    """

    channel = FULL

    def __init__(self, loss: InnerLoss, oracle=None, delta: float = 0.1,
                 detect_grid: str = GEOMETRIC):
        self.loss = loss
        self.oracle = oracle if oracle is not None else ExactOracle()
        self.delta = delta
        self.detect_grid = detect_grid
        self.policy_id = f"general:{loss.kind}"

    def start(self, T: int, xbar: float, rng: np.random.Generator) -> None:
        self.T = T
        self.xbar = xbar
        self.cfg = DetectionConfig(self.delta, T, self.detect_grid)
        self.state = PolicyState(1, 1, SampleWindow(start=1), rng)
        self.eps_schedule: list[float] = []
        self.oracle.reset()

    @property
    def epoch_index(self) -> int:
        return self.state.epoch

    def decide(self, t: int) -> float:
        if t == self.state.epoch_start:
            x = float(self.state.rng.uniform(0.0, self.xbar))
            self.eps_schedule.append(0.0)
            return x
        x, eps = self.oracle.solve(self.state.window, self.loss, self.xbar)
        self.eps_schedule.append(eps)
        return float(min(max(x, 0.0), self.xbar))

    def observe(self, t: int, obs: Observation) -> bool:
        if obs.censored:
            raise ValueError(f"{self.policy_id} needs full demand observations")
        st = self.state
        st.window.append(obs.value)
        self.oracle.observe(obs.value)
        if t > st.epoch_start and detect(st.window, self.cfg) is not None:
            st.epoch += 1
            st.epoch_start = t + 1
            st.window = SampleWindow(start=t + 1)
            self.oracle.reset()
            return True
        return False


class NsaaUncensored(GeneralNsaa):
    """Newsvendor instance of the framework: exact critical-fractile oracle."""

    def __init__(self, loss: LinearNewsvendor, delta: float = 0.1,
                 detect_grid: str = GEOMETRIC):
        if not isinstance(loss, LinearNewsvendor):
            raise TypeError("NSAA orders at a critical fractile; use the linear loss")
        super().__init__(loss, ExactOracle(), delta, detect_grid)
        self.policy_id = "nsaa"


# ---------------------------------------------------------------------------
# Censored elimination policy
# ---------------------------------------------------------------------------

class NsaaCensored(Policy):
    """Elimination-based policy for censored demand with adaptive restarts.

    The active set is a prefix of a uniform grid of T+1 decision levels on
    [0, xbar]; each period plays the largest surviving level, reconstructs
    the demand indicators below it from the sale, eliminates levels whose
    empirical gradient proxy exceeds 2(h+b) * dkw_radius(t - l + 1, T, delta),
    and restarts when the active set empties or the capped KS test fires.
    """

    channel = CENSORED
    policy_id = "nsaa-censored"

    def __init__(self, loss: LinearNewsvendor, delta: float = 0.1,
                 detect_grid: str = GEOMETRIC):
        if not isinstance(loss, LinearNewsvendor):
            raise TypeError("the censored policy eliminates on the newsvendor gradient")
        self.loss = loss
        self.delta = delta
        self.detect_grid = detect_grid

    def start(self, T: int, xbar: float, rng: np.random.Generator) -> None:
        self.T = T
        self.xbar = xbar
        self.grid = np.linspace(0.0, xbar, T + 1)
        self.cfg = DetectionConfig(self.delta, T, self.detect_grid, "capped")
        self.state = PolicyState(1, 1, SampleWindow(start=1), rng)
        self.max_idx = T
        self._last_x = xbar
        self.restarts_empty = 0
        self.restarts_detect = 0

    @property
    def epoch_index(self) -> int:
        return self.state.epoch

    @property
    def active_threshold(self) -> float:
        return float(self.grid[self.max_idx])

    def decide(self, t: int) -> float:
        self._last_x = float(self.grid[self.max_idx])
        return self._last_x

    def observe(self, t: int, obs: Observation) -> bool:
        if not obs.censored:
            raise ValueError("nsaa-censored consumes censored observations")
        x = self._last_x
        sale = obs.value
        if sale > x + 1e-9:
            raise ValueError("recorded sale exceeds the order level")
        # Effective sample: exact indicator carrier for every level <= x.
        # An uncensored sale is the demand itself; a censored one pins the
        # demand above (or, via the lost-sale flag, exactly at) the level.
        if sale < x:
            eff = sale
        elif obs.lost_sale is None:
            eff = math.inf
        else:
            eff = math.inf if obs.lost_sale else x

        st = self.state
        st.window.append(eff)
        n = len(st.window)

        new_max = self._eliminate(n)
        restart = new_max < 0
        if not restart and t > st.epoch_start:
            restart = detect(st.window, self.cfg, y_max=x) is not None
            if restart:
                self.restarts_detect += 1
        elif restart:
            self.restarts_empty += 1

        if restart:
            st.epoch += 1
            st.epoch_start = t + 1
            st.window = SampleWindow(start=t + 1)
            self.max_idx = self.T
            return True
        self.max_idx = new_max
        return False

    def _eliminate(self, n: int) -> int:
        """Largest surviving grid index, or -1 when every level is eliminated."""
        h, b = self.loss.h, self.loss.b
        thr = 2.0 * (h + b) * dkw_radius(n, self.T, self.delta)
        sv = self.state.window.sorted_values
        n_fin = int(np.searchsorted(sv, math.inf, side="left"))
        # largest admissible sample count: (h+b) c / n - b <= thr
        c = int(math.floor(n * (thr + b) / (h + b)))
        while (h + b) * (c + 1) / n - b <= thr:
            c += 1
        while c > 0 and (h + b) * c / n - b > thr:
            c -= 1
        if c >= n_fin:
            return self.max_idx
        cutoff = sv[c]
        idx = int(np.searchsorted(self.grid, cutoff, side="left")) - 1
        return min(self.max_idx, idx)

    def eliminate_linear_scan(self, n: int) -> int:
        """Reference elimination scanning every active grid point (tests only)."""
        h, b = self.loss.h, self.loss.b
        thr = 2.0 * (h + b) * dkw_radius(n, self.T, self.delta)
        sv = self.state.window.sorted_values
        best = -1
        for i in range(self.max_idx + 1):
            cnt = int(np.searchsorted(sv, self.grid[i], side="right"))
            if (h + b) * cnt / n - b <= thr:
                best = i
        return best


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

class SaaFamily(Policy):
    """SAA over all history, a moving window, or periodically restarted windows.

    The window length for msaa/rsaa is n = ceil(kappa * sqrt(T)).  With no
    data in the window the policy warm-starts at 0.  The rsaa schedule resets
    the window every n periods while retaining the most recent observation,
    so a fresh window is never data-free after the first period.
    """

    channel = FULL

    def __init__(self, kind: str, loss: LinearNewsvendor, kappa: float = 1.0):
        if kind not in ("saa", "msaa", "rsaa"):
            raise ValueError(f"unknown baseline {kind!r}")
        self.kind = kind
        self.loss = loss
        self.kappa = kappa
        self.policy_id = kind

    def start(self, T: int, xbar: float, rng: np.random.Generator) -> None:
        self.T = T
        self.xbar = xbar
        self.n_win = max(1, int(math.ceil(self.kappa * math.sqrt(T))))
        self._all = SampleWindow(start=1)
        self._arrivals = np.empty(T, dtype=np.float64)
        self._count = 0

    def window_start(self, t: int) -> int:
        """First period whose observation the decision at t may use."""
        if self.kind == "saa":
            return 1
        if self.kind == "msaa":
            return max(1, t - self.n_win)
        return max(1, self.n_win * ((t - 1) // self.n_win))

    def decide(self, t: int) -> float:
        lo = self.window_start(t)
        if lo > self._count:
            return 0.0
        if self.kind == "saa":
            return quantile_oracle(self._all, self.loss.h, self.loss.b)
        vals = self._arrivals[lo - 1 : self._count]
        k = int(math.ceil(vals.size * self.loss.fractile - 1e-12))
        k = min(max(k, 1), vals.size)
        return float(np.partition(vals, k - 1)[k - 1])

    def observe(self, t: int, obs: Observation) -> bool:
        if obs.censored:
            raise ValueError(f"{self.kind} needs full demand observations")
        self._arrivals[self._count] = obs.value
        self._count += 1
        if self.kind == "saa":
            self._all.append(obs.value)
        return False


# ---------------------------------------------------------------------------
# Policy factory
# ---------------------------------------------------------------------------

def make_policy(spec: str, loss: InnerLoss, delta: float = 0.1, kappa: float = 1.0,
                detect_grid: str = GEOMETRIC) -> Policy:
    """Build a policy from its CLI string.

    Recognized: ``nsaa``, ``nsaa-censored``, ``saa``, ``msaa``, ``rsaa`` and
    ``general:<loss>:<oracle>`` with loss in {linear, quadratic, auction} and
    oracle in {exact, quantile, mean, breakpoint, ogd}.
    """
    if spec == "nsaa":
        return NsaaUncensored(loss, delta, detect_grid)
    if spec == "nsaa-censored":
        return NsaaCensored(loss, delta, detect_grid)
    if spec in ("saa", "msaa", "rsaa"):
        return SaaFamily(spec, loss, kappa)
    if spec.startswith("general:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad general policy spec {spec!r}")
        _, loss_name, oracle_name = parts
        expected = {"linear": LinearNewsvendor, "quadratic": QuadraticLoss,
                    "auction": AuctionLoss}.get(loss_name)
        if expected is None or not isinstance(loss, expected):
            raise ValueError(f"policy {spec!r} needs a {loss_name} loss, got {loss.kind}")
        if oracle_name == "ogd":
            pol = _GeneralNsaaOgd(loss, delta, detect_grid)
            pol.policy_id = spec
            return pol
        matching = {"linear": "quantile", "quadratic": "mean", "auction": "breakpoint"}
        if oracle_name not in ("exact", matching[loss_name]):
            raise ValueError(f"oracle {oracle_name!r} does not solve the {loss_name} loss")
        pol = GeneralNsaa(loss, ExactOracle(), delta, detect_grid)
        pol.policy_id = spec
        return pol
    raise ValueError(f"unknown policy {spec!r}")


class _GeneralNsaaOgd(GeneralNsaa):
    """General NSAA whose OGD oracle is built once the domain is known."""

    def __init__(self, loss: InnerLoss, delta: float, detect_grid: str):
        super().__init__(loss, ExactOracle(), delta, detect_grid)

    def start(self, T: int, xbar: float, rng: np.random.Generator) -> None:
        self.oracle = OgdOracle(self.loss, xbar)
        super().start(T, xbar, rng)
