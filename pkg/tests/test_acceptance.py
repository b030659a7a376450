"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.  The heavy scaling checks (criteria 5 and 6) share
module-scoped sweeps and a process pool; expect the module to take on the
order of 15 minutes on two cores with the numba kernels.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from nsaa.cli import ExperimentConfig, ingest_dataset, run_experiment
from nsaa.distributions import (
    DemandSequence,
    make_hard_instance,
    uniform_model,
)
from nsaa.empirical import SampleWindow, ks_distance
from nsaa.harness import dynamic_regret, run, slope_fit, sweep, _structural_violations
from nsaa.losses import LinearNewsvendor, ghat, quantile_oracle
from nsaa.policies import NsaaCensored, NsaaUncensored, SaaFamily

WORKERS = os.cpu_count() or 1
LIN = LinearNewsvendor(1.0, 1.0)
HORIZONS = [500, 2000, 8000]
SCALING_SEEDS = 50

_here = os.path.dirname(__file__)
FIXTURE = os.path.join(_here, "data", "fixture.csv")


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"criterion {criterion:02d} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, f"criterion {criterion}: {detail}"


# ---------------------------------------------------------------------------
# workers for the pooled Monte Carlo criteria
# ---------------------------------------------------------------------------

def _stationary_job(seed: int) -> int:
    seq = DemandSequence([uniform_model(0.0, 1.0)] * 2000)
    tr = run(seq, NsaaUncensored(LIN, delta=0.1), LIN, "full", seed)
    return int(tr.restarts.any())


def _epoch_count_job(seed: int) -> int:
    seq = make_hard_instance("switch", 2000, 4, np.random.default_rng([seed, 2]))
    tr = run(seq, NsaaUncensored(LIN, delta=0.1), LIN, "full", seed)
    return int(tr.epochs[-1])


def _abrupt_change_job(seed: int) -> tuple[float, float, int]:
    # single switch of TV distance 0.5 halfway through the horizon
    a = uniform_model(0.0, 1.0, 2.0)
    b = uniform_model(0.0, 2.0, 2.0)
    seq = DemandSequence([a] * 2000 + [b] * 2000)
    tr_n = run(seq, NsaaUncensored(LIN, delta=0.1), LIN, "full", seed)
    tr_s = run(seq, SaaFamily("saa", LIN), LIN, "full", seed)
    bad = _structural_violations(tr_n) + _structural_violations(tr_s)
    return (dynamic_regret(tr_n, seq, LIN).cumulative,
            dynamic_regret(tr_s, seq, LIN).cumulative, bad)


def _pool_map(fn, args):
    if WORKERS <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        return list(pool.map(fn, args, chunksize=4))


# ---------------------------------------------------------------------------
# shared scaling sweeps (criteria 5, 6, 9)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def scaling_general():
    out = {}
    for spec in ("nsaa", "nsaa-censored"):
        out[spec] = sweep("switch", 4, HORIZONS, SCALING_SEEDS, spec,
                          h=1.0, b=1.0, delta=0.1, workers=WORKERS)
    return out


@pytest.fixture(scope="module")
def scaling_separated():
    return sweep("separated-switch", 4, HORIZONS, SCALING_SEEDS, "nsaa",
                 h=1.0, b=1.0, delta=0.1, epsilon=0.1, workers=WORKERS)


@pytest.fixture(scope="module")
def abrupt_change():
    return _pool_map(_abrupt_change_job, range(100))


def test_criterion_01_false_restart_control():
    t0 = time.time()
    fired = _pool_map(_stationary_job, range(200))
    frac = float(np.mean(fired))
    elapsed = time.time() - t0
    report(1, frac <= 0.15 and elapsed <= 120,
           f"false-restart fraction {frac:.3f} <= 0.15 over 200 seeds "
           f"(T=2000, delta=0.1), {elapsed:.0f}s")


def test_criterion_02_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(1002)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 51))
        xbar = float(rng.uniform(0.5, 8.0))
        vals = rng.uniform(0.0, xbar, n)
        h = float(rng.uniform(0.1, 4.0))
        b = float(rng.uniform(0.1, 4.0))
        grid = np.arange(0.0, xbar + 1e-3, 1e-3)
        sv = np.sort(vals)
        cs = np.concatenate(([0.0], np.cumsum(sv)))
        idx = np.searchsorted(sv, grid, side="right")
        cost = (h * (grid * idx - cs[idx]) + b * ((cs[n] - cs[idx]) - grid * (n - idx))) / n
        brute = grid[int(np.argmin(cost))]
        fast = quantile_oracle(SampleWindow(values=vals), h, b)
        worst = max(worst, abs(fast - brute))
    elapsed = time.time() - t0
    report(2, worst <= 1e-3 + 1e-9 and elapsed <= 30,
           f"quantile oracle vs brute grid: worst gap {worst:.2e} <= 1e-3, {elapsed:.0f}s")


def test_criterion_03_ks_exactness():
    t0 = time.time()
    rng = np.random.default_rng(1003)
    worst = 0.0
    base_grid = np.linspace(0.0, 1.0, 10_000)
    for _ in range(1000):
        na, nb = rng.integers(1, 60, 2)
        a = rng.uniform(0, 1, na)
        b = rng.uniform(0, 1, nb)
        pts = np.unique(np.concatenate([base_grid, a, b]))
        sa, sb = np.sort(a), np.sort(b)
        fa = np.searchsorted(sa, pts, side="right") / na
        fb = np.searchsorted(sb, pts, side="right") / nb
        brute = float(np.max(np.abs(fa - fb)))
        fast = ks_distance(SampleWindow(values=a), SampleWindow(values=b))
        worst = max(worst, abs(fast - brute))
    elapsed = time.time() - t0
    report(3, worst <= 1e-12 and elapsed <= 30,
           f"ks_distance vs dense-grid supremum: worst gap {worst:.2e} <= 1e-12, "
           f"{elapsed:.0f}s")


def test_criterion_04_epoch_count_bound():
    t0 = time.time()
    epochs = np.array(_pool_map(_epoch_count_job, range(200)))
    frac = float(np.mean(epochs <= 5))
    elapsed = time.time() - t0
    report(4, frac >= 0.85 and elapsed <= 180,
           f"epochs <= S+1=5 in {frac:.1%} of 200 switch runs "
           f"(max seen {epochs.max()}), {elapsed:.0f}s")


def test_criterion_05_regret_scaling_general(scaling_general):
    slope_u = scaling_general["nsaa"]["slope"]
    slope_c = scaling_general["nsaa-censored"]["slope"]
    ok = 0.40 <= slope_u <= 0.75 and 0.40 <= slope_c <= 0.75
    report(5, ok,
           f"switch-instance slopes: uncensored {slope_u:.3f}, censored "
           f"{slope_c:.3f}, band [0.40, 0.75] (S=4, h=b=1, {SCALING_SEEDS} seeds)")


def test_criterion_06_regret_scaling_separated(scaling_general, scaling_separated):
    slope_sep = scaling_separated["slope"]
    slope_gen = scaling_general["nsaa"]["slope"]
    ok = slope_sep <= 0.40 and slope_sep < slope_gen
    report(6, ok,
           f"separated-switch slope {slope_sep:.3f} (need <= 0.40 and < general "
           f"slope {slope_gen:.3f}); eps=0.1 switches are below the detection "
           f"threshold at these horizons, see decisions ledger")


def test_criterion_07_baseline_dominance(abrupt_change):
    nsaa_mean = float(np.mean([r[0] for r in abrupt_change]))
    saa_mean = float(np.mean([r[1] for r in abrupt_change]))
    ok = nsaa_mean < 0.75 * saa_mean
    report(7, ok,
           f"abrupt TV-0.5 change: NSAA mean regret {nsaa_mean:.1f} vs SAA "
           f"{saa_mean:.1f}, need >= 25% margin; the 0.5 KS signal is below "
           f"the T=4000 detection threshold, see decisions ledger")


def test_criterion_08_replay_protocol(tmp_path):
    t0 = time.time()
    cfg = ExperimentConfig(experiment="replay", ratio=0.7, h=1.0, b=None,
                           policies=["nsaa", "saa", "msaa", "rsaa"],
                           out=str(tmp_path))
    summary = run_experiment(cfg, data_path=FIXTURE)
    table = summary["table"]
    for path_env in ("NSAA_NURSING_CSV", "NSAA_COVID_CSV"):
        ext = os.environ.get(path_env)
        if ext and os.path.exists(ext):
            ext_summary = run_experiment(cfg, data_path=ext)
            print(f"  external {path_env}: "
                  + ", ".join(f"{k} R={v['relative_cost']:.3f}"
                              for k, v in ext_summary["table"].items()))
    elapsed = time.time() - t0
    rel = {k: v["relative_cost"] for k, v in table.items()}
    ok = rel["nsaa"] == 1.0 and rel["saa"] >= 1.0 and elapsed <= 60
    report(8, ok,
           "fixture relative costs "
           + ", ".join(f"{k}={v:.3f}" for k, v in rel.items())
           + f"; R^saa >= 1.0 required, {elapsed:.0f}s")


def test_criterion_09_censored_structural(scaling_general, scaling_separated,
                                          abrupt_change):
    sweep_bad = (scaling_general["nsaa"]["violations"]
                 + scaling_general["nsaa-censored"]["violations"]
                 + scaling_separated["violations"])
    abrupt_bad = sum(r[2] for r in abrupt_change)

    # direct elimination check: prefix active set and fast/slow agreement
    rng = np.random.default_rng(1009)
    elim_bad = 0
    for trial in range(10):
        loss = LinearNewsvendor(float(rng.uniform(0.2, 3)), float(rng.uniform(0.2, 3)))
        pol = NsaaCensored(loss, delta=0.1)
        pol.start(300, 1.0, np.random.default_rng(trial))
        for t in range(1, 200):
            x = pol.decide(t)
            d = float(rng.uniform(0, 1))
            n_next = len(pol.state.window) + 1
            pol.state.window.append(min(x, d) if d < x else np.inf)
            if pol._eliminate(n_next) != pol.eliminate_linear_scan(n_next):
                elim_bad += 1
            pol.max_idx = max(pol._eliminate(n_next), 0)
    total = sweep_bad + abrupt_bad + elim_bad
    report(9, total == 0,
           f"structural violations: {sweep_bad} in scaling sweeps, {abrupt_bad} "
           f"in abrupt-change runs, {elim_bad} elimination mismatches (need 0)")


def test_criterion_10_ghat_identity():
    t0 = time.time()
    rng = np.random.default_rng(1010)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(1, 200))
        vals = rng.uniform(0, 5, n)
        w = SampleWindow(values=vals)
        for _ in range(100):
            x = float(rng.uniform(-1, 6))
            h = float(rng.uniform(0.0, 4.0))
            b = float(rng.uniform(0.0, 4.0))
            direct = (h + b) * (np.sum(vals <= x) / n) - b
            assert ghat(w, x, h, b) == direct
            checked += 1
    elapsed = time.time() - t0
    report(10, checked == 10_000 and elapsed <= 10,
           f"ghat == (h+b)*ecdf - b exactly on {checked} random cases, {elapsed:.0f}s")
