"""Drive policies through demand sequences and account costs and regret.

Expected costs in the regret path are always closed-form (never Monte Carlo),
so the per-period regret of an exact-oracle clairvoyant is nonnegative up to
rounding.  Each replication owns its RNG state: the demand stream and the
policy's internal randomization use separate child seeds of the run seed, so
two policies replayed with the same seed see byte-identical demand.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import DISCRETE, DemandModel, DemandSequence
from .losses import AuctionLoss, InnerLoss, LinearNewsvendor, QuadraticLoss, loss_eval
from .policies import CENSORED, FULL, Observation, Policy

TRACE_HEADER = ["t", "policy", "decision", "observed", "cost", "epoch", "restart"]
REGRET_HEADER = TRACE_HEADER + ["regret", "cum_regret"]


@dataclass
class Trace:
    """Per-period record of one replication."""

    policy_id: str
    channel: str
    seed: int
    source: str  # "synthetic" or "replay"
    decisions: np.ndarray
    observed: np.ndarray
    costs: np.ndarray
    epochs: np.ndarray
    restarts: np.ndarray

    @property
    def T(self) -> int:
        return self.decisions.size

    @property
    def cumulative_cost(self) -> float:
        return float(np.sum(self.costs))


@dataclass
class RegretReport:
    per_period: np.ndarray
    clairvoyant: np.ndarray

    @property
    def cumulative(self) -> float:
        return float(np.sum(self.per_period))


@dataclass
class CostReport:
    cumulative: float
    relative: float


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def run(seq: DemandSequence, policy: Policy, loss: InnerLoss, channel: str,
        seed: int) -> Trace:
    """Simulate one replication: draw demand, feed the channel, record costs.

    The realized cost always uses the true demand draw; the censored channel
    only restricts what the policy observes (the sale plus, for discrete
    models, a lost-sale indicator).
    """
    if channel not in (FULL, CENSORED):
        raise ValueError(f"unknown channel {channel!r}")
    if policy.channel != channel:
        raise ValueError(
            f"policy {policy.policy_id!r} consumes {policy.channel} observations, "
            f"not {channel}")
    T = seq.T
    rng_demand = np.random.default_rng([seed, 0])
    rng_policy = np.random.default_rng([seed, 1])
    policy.start(T, seq.xbar, rng_policy)

    decisions = np.empty(T)
    observed = np.empty(T)
    costs = np.empty(T)
    epochs = np.empty(T, dtype=np.int64)
    restarts = np.zeros(T, dtype=bool)

    for t in range(1, T + 1):
        model = seq.models[t - 1]
        x = policy.decide(t)
        d = float(model.sample(rng_demand))
        epochs[t - 1] = policy.epoch_index
        if channel == FULL:
            obs = Observation(value=d)
            observed[t - 1] = d
        else:
            sale = min(x, d)
            flag = bool(d > x) if model.kind == DISCRETE else None
            obs = Observation(value=sale, censored=True, lost_sale=flag)
            observed[t - 1] = sale
        decisions[t - 1] = x
        costs[t - 1] = loss_eval(loss, x, d)
        restarts[t - 1] = policy.observe(t, obs)

    return Trace(policy.policy_id, channel, seed, "synthetic",
                 decisions, observed, costs, epochs, restarts)


# ---------------------------------------------------------------------------
# Clairvoyant optima and dynamic regret
# ---------------------------------------------------------------------------

def expected_cost(model: DemandModel, loss: InnerLoss, x: float) -> float:
    """Exact f(x) = E[F(x, D)] by piecewise integration."""
    if not 0.0 <= x <= model.xbar + 1e-12:
        raise ValueError(f"decision {x} outside [0, {model.xbar}]")
    if isinstance(loss, LinearNewsvendor):
        overage = model.integrated_cdf(x)  # E[(x - D)^+]
        underage = model.mean() - x + overage  # E[(D - x)^+]
        return loss.h * overage + loss.b * underage
    if isinstance(loss, QuadraticLoss):
        return loss.a * (x * x - 2.0 * x * model.mean() + model.second_moment())
    return (x - loss.v) * model.cdf(x)


def clairvoyant_decision(model: DemandModel, loss: InnerLoss) -> float:
    """Exact argmin of the expected cost over [0, xbar] (smallest on ties)."""
    if isinstance(loss, LinearNewsvendor):
        return model.quantile(loss.fractile)
    if isinstance(loss, QuadraticLoss):
        return min(max(model.mean(), 0.0), model.xbar)
    return _auction_argmin(model, loss)


def _auction_argmin(model: DemandModel, loss: AuctionLoss) -> float:
    # f(x) = (x - v) G(x) is piecewise quadratic (piecewise linear when G is
    # a step function); candidates are cell edges, stationary points of the
    # quadratic pieces, and the domain edges.
    cands = [0.0, model.xbar]
    cands.extend(float(b) for b in model.breakpoints)
    if model.kind != DISCRETE:
        bp = model.breakpoints
        for i in range(model.values.size):
            c = float(model.values[i])
            if c <= 0.0:
                continue
            g0 = model.cdf(float(bp[i]))
            # d/dx [(x - v)(g0 + c (x - bp_i))] = 0
            xs = (c * (bp[i] + loss.v) - g0) / (2.0 * c)
            if bp[i] <= xs <= bp[i + 1]:
                cands.append(float(xs))
    cands = sorted(set(min(max(c, 0.0), model.xbar) for c in cands))
    vals = [expected_cost(model, loss, c) for c in cands]
    return float(cands[int(np.argmin(vals))])


def dynamic_regret(trace: Trace, seq: DemandSequence, loss: InnerLoss) -> RegretReport:
    """Per-period f_t(x_t) - f_t(x_t*) against the exact clairvoyant."""
    if trace.source != "synthetic":
        raise ValueError("dynamic regret needs ground-truth models; "
                         "replay traces have none")
    if trace.T != seq.T:
        raise ValueError("trace and sequence horizons differ")
    per_period = np.empty(trace.T)
    x_star = np.empty(trace.T)
    cache: dict[int, tuple[float, float]] = {}
    for t in range(trace.T):
        model = seq.models[t]
        key = id(model)
        if key not in cache:
            xs = clairvoyant_decision(model, loss)
            cache[key] = (xs, expected_cost(model, loss, xs))
        xs, f_star = cache[key]
        x_star[t] = xs
        per_period[t] = expected_cost(model, loss, float(trace.decisions[t])) - f_star
    return RegretReport(per_period=per_period, clairvoyant=x_star)


# ---------------------------------------------------------------------------
# Dataset replay
# ---------------------------------------------------------------------------

def replay(values, policy: Policy, loss: InnerLoss, seed: int = 0,
           reference: Policy | None = None) -> tuple[CostReport, Trace]:
    """Feed a recorded demand stream to a full-observation policy.

    The decision domain is [0, 1.05 * max(values)] since datasets carry no
    a-priori bound.  The relative cost divides by the cumulative cost of the
    reference policy (NSAA by default) replayed on the same stream.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot replay an empty dataset")
    if policy.channel != FULL:
        raise ValueError("replay feeds full observations")
    trace = _replay_trace(values, policy, loss, seed)
    if reference is None:
        from .policies import NsaaUncensored

        if not isinstance(loss, LinearNewsvendor):
            raise ValueError("the default NSAA reference needs a linear loss")
        reference = NsaaUncensored(loss)
    ref_trace = (trace if reference.policy_id == policy.policy_id
                 else _replay_trace(values, reference, loss, seed))
    rel = trace.cumulative_cost / ref_trace.cumulative_cost
    return CostReport(cumulative=trace.cumulative_cost, relative=rel), trace


def _replay_trace(values: np.ndarray, policy: Policy, loss: InnerLoss,
                  seed: int) -> Trace:
    T = values.size
    xbar = float(np.max(values)) * 1.05
    rng_policy = np.random.default_rng([seed, 1])
    policy.start(T, xbar, rng_policy)
    decisions = np.empty(T)
    costs = np.empty(T)
    epochs = np.empty(T, dtype=np.int64)
    restarts = np.zeros(T, dtype=bool)
    for t in range(1, T + 1):
        x = policy.decide(t)
        d = float(values[t - 1])
        epochs[t - 1] = policy.epoch_index
        decisions[t - 1] = x
        costs[t - 1] = loss_eval(loss, x, d)
        restarts[t - 1] = policy.observe(t, Observation(value=d))
    return Trace(policy.policy_id, FULL, seed, "replay",
                 decisions, values.copy(), costs, epochs, restarts)


# ---------------------------------------------------------------------------
# Scaling fits and sweeps
# ---------------------------------------------------------------------------

def slope_fit(horizons, regrets) -> float:
    """Least-squares slope of log(regret) against log(T)."""
    horizons = np.asarray(horizons, dtype=np.float64)
    regrets = np.asarray(regrets, dtype=np.float64)
    if horizons.size < 2:
        raise ValueError("need at least two horizons to fit a slope")
    if np.any(regrets <= 0.0):
        raise ValueError("slope fit needs positive regrets")
    return float(np.polyfit(np.log(horizons), np.log(regrets), 1)[0])


@dataclass
class SweepJob:
    """One replication of a hard-instance experiment (picklable)."""

    family: str
    budget: float
    T: int
    seed: int
    policy_spec: str
    h: float
    b: float
    delta: float
    kappa: float
    detect_grid: str
    epsilon: float | None = None


def run_sweep_job(job: SweepJob) -> dict:
    """Worker entry point: one seeded replication, returns scalars only."""
    from .distributions import make_hard_instance
    from .policies import make_policy

    loss = LinearNewsvendor(job.h, job.b)
    seq = make_hard_instance(job.family, job.T, job.budget,
                             np.random.default_rng([job.seed, 2]),
                             epsilon=job.epsilon)
    policy = make_policy(job.policy_spec, loss, job.delta, job.kappa, job.detect_grid)
    channel = policy.channel
    trace = run(seq, policy, loss, channel, job.seed)
    report = dynamic_regret(trace, seq, loss)
    return {
        "T": job.T,
        "seed": job.seed,
        "policy": job.policy_spec,
        "cum_regret": report.cumulative,
        "epochs": int(trace.epochs[-1]),
        "violations": _structural_violations(trace),
    }


def _structural_violations(trace: Trace) -> int:
    """Deterministic structural checks on a finished trace.

    Counts periods violating: decisions inside [0, xbar] implied ordering,
    sale never above the decision (censored channel), and decisions
    nonincreasing within an epoch (censored channel).
    """
    bad = 0
    if trace.channel == CENSORED:
        bad += int(np.sum(trace.observed > trace.decisions + 1e-9))
        same_epoch = trace.epochs[1:] == trace.epochs[:-1]
        increased = trace.decisions[1:] > trace.decisions[:-1] + 1e-12
        bad += int(np.sum(same_epoch & increased))
    if trace.T > 1:
        expected_next = trace.epochs[:-1] + trace.restarts[:-1]
        bad += int(np.sum(trace.epochs[1:] != expected_next))
    return bad


def sweep(family: str, budget: float, horizons, seeds: int, policy_spec: str,
          h: float = 1.0, b: float = 7.0 / 3.0, delta: float = 0.1,
          kappa: float = 1.0, detect_grid: str = "geometric",
          epsilon: float | None = None, base_seed: int = 0,
          workers: int | None = None) -> dict:
    """Mean regret per horizon plus the fitted scaling exponent.

    Replications fan out over a process pool; aggregation is keyed by
    (T, seed) so the result is independent of completion order.
    """
    jobs = [
        SweepJob(family, budget, int(T), base_seed + i, policy_spec,
                 h, b, delta, kappa, detect_grid, epsilon)
        for T in horizons
        for i in range(seeds)
    ]
    results = run_jobs(jobs, workers)
    per_horizon: dict[int, list[float]] = {int(T): [] for T in horizons}
    violations = 0
    epochs: dict[int, list[int]] = {int(T): [] for T in horizons}
    for r in results:
        per_horizon[r["T"]].append(r["cum_regret"])
        epochs[r["T"]].append(r["epochs"])
        violations += r["violations"]
    means = {T: float(np.mean(v)) for T, v in per_horizon.items()}
    stderr = {T: float(np.std(v) / math.sqrt(len(v))) for T, v in per_horizon.items()}
    out = {
        "policy": policy_spec,
        "family": family,
        "budget": budget,
        "per_horizon": {str(T): {"mean_regret": means[T], "stderr": stderr[T],
                                 "mean_epochs": float(np.mean(epochs[T]))}
                        for T in means},
        "violations": violations,
        "seeds": [base_seed + i for i in range(seeds)],
    }
    if len(means) >= 2:
        ts = sorted(means)
        out["slope"] = slope_fit(ts, [means[T] for T in ts])
    return out


def run_jobs(jobs: list[SweepJob], workers: int | None = None) -> list[dict]:
    """Execute jobs serially or on a process pool; output order matches input."""
    if workers is None:
        workers = 1
    if workers <= 1 or len(jobs) <= 1:
        return [run_sweep_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_sweep_job, jobs, chunksize=4))


# ---------------------------------------------------------------------------
# Trace CSV round trip
# ---------------------------------------------------------------------------

def write_trace_csv(trace: Trace, path, regret: RegretReport | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if regret is None:
            w.writerow(TRACE_HEADER)
        else:
            w.writerow(REGRET_HEADER)
            cum = np.cumsum(regret.per_period)
        for t in range(trace.T):
            row = [t + 1, trace.policy_id, repr(float(trace.decisions[t])),
                   repr(float(trace.observed[t])), repr(float(trace.costs[t])),
                   int(trace.epochs[t]), int(trace.restarts[t])]
            if regret is not None:
                row += [repr(float(regret.per_period[t])), repr(float(cum[t]))]
            w.writerow(row)


def read_trace_csv(path) -> Trace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[: len(TRACE_HEADER)] != TRACE_HEADER:
        raise ValueError(f"unexpected trace header in {path}")
    T = len(body)
    decisions = np.array([float(r[2]) for r in body])
    observed = np.array([float(r[3]) for r in body])
    costs = np.array([float(r[4]) for r in body])
    epochs = np.array([int(r[5]) for r in body], dtype=np.int64)
    restarts = np.array([bool(int(r[6])) for r in body])
    policy_id = body[0][1] if body else "unknown"
    return Trace(policy_id, FULL, 0, "replay", decisions, observed, costs,
                 epochs, restarts)
