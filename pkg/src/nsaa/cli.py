"""Batch front door: dataset ingestion, experiment configs, and subcommands.

Three experiment kinds:

* ``simulate`` runs policies on synthetic hard instances and writes per-seed
  regret CSVs plus a JSON summary,
* ``replay`` feeds a recorded demand CSV to the policies and tabulates
  cumulative and relative cost with NSAA as the reference,
* ``sweep`` measures mean regret across horizons and fits the scaling slope.

Every summary embeds the fully resolved config (including the derived
underage cost and the RNG seeds) so a run can be reproduced bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import HARD_KINDS, make_hard_instance
from .harness import (
    SweepJob,
    dynamic_regret,
    replay,
    run,
    run_jobs,
    sweep,
    write_trace_csv,
)
from .losses import AuctionLoss, LinearNewsvendor, QuadraticLoss
from .policies import make_policy


def ingest_dataset(path) -> list[float]:
    """Read a demand series from a one-column (value) or two-column
    (date,value) CSV, optional header, order preserved.

    Malformed, negative, or non-finite values raise with the line number.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    values: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            cell = row[-1].strip()
            if lineno == 1 and not _is_number(cell):
                continue  # header
            if len(row) > 2:
                raise ValueError(f"{path}: line {lineno}: expected 1 or 2 columns")
            if not _is_number(cell):
                raise ValueError(f"{path}: line {lineno}: non-numeric value {cell!r}")
            v = float(cell)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{path}: line {lineno}: value {v} must be finite and >= 0")
            values.append(v)
    if not values:
        raise ValueError(f"{path}: no data rows")
    return values


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclass
class ExperimentConfig:
    """Resolved experiment settings; defaults follow the r=0.7, h=1,
    kappa=1, delta=0.1 protocol."""

    experiment: str = "simulate"
    T: int = 2000
    horizons: list[int] = field(default_factory=list)
    family: str = "switch"
    budget: float = 4.0
    loss_kind: str = "linear"
    h: float = 1.0
    b: float | None = None
    ratio: float | None = 0.7
    a: float = 1.0
    v: float = 0.5
    delta: float = 0.1
    kappa: float = 1.0
    policies: list[str] = field(default_factory=lambda: ["nsaa"])
    seeds: int = 1
    seed: int = 0
    detect_grid: str = "geometric"
    epsilon: float | None = None
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.loss_kind == "linear":
            if self.b is None and self.ratio is None:
                raise ValueError("give either b or the critical ratio r")
            if self.ratio is not None:
                if not 0.0 < self.ratio < 1.0:
                    raise ValueError("critical ratio must lie in (0, 1)")
                derived = self.ratio * self.h / (1.0 - self.ratio)
                if self.b is not None and abs(self.b - derived) > 1e-9:
                    raise ValueError(
                        f"b={self.b} inconsistent with r={self.ratio}, h={self.h}")
                self.b = derived
            else:
                self.ratio = self.b / (self.h + self.b)
        if self.seeds < 1:
            raise ValueError("need at least one seed")
        if self.family not in HARD_KINDS:
            raise ValueError(f"unknown instance family {self.family!r}")

    def make_loss(self):
        if self.loss_kind == "linear":
            return LinearNewsvendor(self.h, self.b)
        if self.loss_kind == "quadratic":
            return QuadraticLoss(self.a)
        if self.loss_kind == "auction":
            return AuctionLoss(self.v)
        raise ValueError(f"unknown loss kind {self.loss_kind!r}")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**raw)


def run_experiment(cfg: ExperimentConfig, data_path: str | None = None) -> dict:
    """Dispatch one experiment and write its result files under cfg.out."""
    os.makedirs(cfg.out, exist_ok=True)
    if cfg.experiment == "simulate":
        summary = _simulate(cfg)
    elif cfg.experiment == "replay":
        if data_path is None:
            raise ValueError("replay needs a dataset path")
        summary = _replay(cfg, data_path)
    elif cfg.experiment == "sweep":
        summary = _sweep(cfg)
    else:
        raise ValueError(f"unknown experiment kind {cfg.experiment!r}")
    summary["config"] = asdict(cfg)
    out_path = os.path.join(cfg.out, f"{cfg.experiment}_summary.json")
    with open(out_path, "w") as fh:
        json.dump(summary, fh, indent=2)
    summary["summary_path"] = out_path
    return summary


def _simulate(cfg: ExperimentConfig) -> dict:
    loss = cfg.make_loss()
    seeds = [cfg.seed + i for i in range(cfg.seeds)]
    results: dict[str, dict] = {}
    for spec in cfg.policies:
        cums = []
        for s in seeds:
            seq = make_hard_instance(cfg.family, cfg.T, cfg.budget,
                                     np.random.default_rng([s, 2]),
                                     epsilon=cfg.epsilon)
            policy = make_policy(spec, loss, cfg.delta, cfg.kappa, cfg.detect_grid)
            trace = run(seq, policy, loss, policy.channel, s)
            report = dynamic_regret(trace, seq, loss)
            cums.append(report.cumulative)
            name = spec.replace(":", "_")
            write_trace_csv(trace, os.path.join(cfg.out, f"regret_{name}_{s}.csv"),
                            regret=report)
        results[spec] = {
            "mean_cum_regret": float(np.mean(cums)),
            "stderr": float(np.std(cums) / math.sqrt(len(cums))),
        }
    return {"results": results, "seeds": seeds}


def _replay(cfg: ExperimentConfig, data_path: str) -> dict:
    values = ingest_dataset(data_path)
    loss = cfg.make_loss()
    if not isinstance(loss, LinearNewsvendor):
        raise ValueError("replay evaluates the newsvendor cost; use the linear loss")
    reference = make_policy("nsaa", loss, cfg.delta, cfg.kappa, cfg.detect_grid)
    table: dict[str, dict] = {}
    rows = [["policy", "cumulative_cost", "relative_cost"]]
    for spec in cfg.policies:
        policy = make_policy(spec, loss, cfg.delta, cfg.kappa, cfg.detect_grid)
        report, trace = replay(values, policy, loss, cfg.seed, reference=reference)
        table[spec] = {"cumulative_cost": report.cumulative,
                       "relative_cost": report.relative}
        rows.append([spec, repr(report.cumulative), repr(report.relative)])
        write_trace_csv(trace, os.path.join(cfg.out, f"replay_{spec}.csv"))
    with open(os.path.join(cfg.out, "replay_costs.csv"), "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return {"table": table, "dataset": str(data_path), "n": len(values)}


def _sweep(cfg: ExperimentConfig) -> dict:
    if len(cfg.horizons) < 2:
        raise ValueError("a sweep needs at least two horizons")
    spec = cfg.policies[0]
    out = sweep(cfg.family, cfg.budget, cfg.horizons, cfg.seeds, spec,
                h=cfg.h, b=cfg.b, delta=cfg.delta, kappa=cfg.kappa,
                detect_grid=cfg.detect_grid, epsilon=cfg.epsilon,
                base_seed=cfg.seed, workers=cfg.workers)
    return out


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--detect-grid", choices=["all", "geometric"], default="geometric")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--kappa", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsaa",
                                 description="Nonstationary newsvendor experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthetic hard-instance runs")
    sim.add_argument("--config", required=True, help="ExperimentConfig JSON")
    _add_common(sim)

    rep = sub.add_parser("replay", help="replay a recorded demand CSV")
    rep.add_argument("--data", required=True)
    rep.add_argument("--policy", default="nsaa,saa,msaa,rsaa",
                     help="comma-separated policy list")
    rep.add_argument("--ratio", type=float, default=0.7)
    rep.add_argument("--h", type=float, default=1.0)
    _add_common(rep)

    sw = sub.add_parser("sweep", help="regret scaling across horizons")
    sw.add_argument("--family", choices=list(HARD_KINDS), required=True)
    sw.add_argument("--budget", type=float, required=True)
    sw.add_argument("--horizons", required=True, help="comma-separated horizons")
    sw.add_argument("--seeds", type=int, default=10)
    sw.add_argument("--policy", default="nsaa")
    sw.add_argument("--epsilon", type=float, default=None)
    sw.add_argument("--ratio", type=float, default=0.7)
    sw.add_argument("--h", type=float, default=1.0)
    sw.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_common(sw)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        cfg = ExperimentConfig.from_json(args.config)
        cfg.detect_grid = args.detect_grid
        cfg.out = args.out
        summary = run_experiment(cfg)
    elif args.command == "replay":
        cfg = ExperimentConfig(
            experiment="replay", ratio=args.ratio, h=args.h, b=None,
            policies=args.policy.split(","), delta=args.delta, kappa=args.kappa,
            seed=args.seed, detect_grid=args.detect_grid, out=args.out)
        summary = run_experiment(cfg, data_path=args.data)
    else:
        cfg = ExperimentConfig(
            experiment="sweep", family=args.family, budget=args.budget,
            horizons=[int(x) for x in args.horizons.split(",")],
            seeds=args.seeds, policies=[args.policy], ratio=args.ratio,
            h=args.h, b=None, delta=args.delta, kappa=args.kappa,
            seed=args.seed, detect_grid=args.detect_grid, out=args.out,
            epsilon=args.epsilon, workers=args.workers)
        summary = run_experiment(cfg)
    print(json.dumps({k: v for k, v in summary.items() if k != "config"}, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
