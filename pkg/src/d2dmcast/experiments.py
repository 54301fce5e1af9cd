"""Monte Carlo harness.

Every trial regenerates a cell from its own seed, derived from
``(master_seed, c, trial)``, and runs all requested algorithms on that same
gain matrix. Trials may run in worker processes; results are gathered in
(c, trial) order, so the aggregate never depends on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import ChannelParams
from .cluster import ThresholdSchedule, solve_cluster
from .config import ALGORITHMS, RunConfig, normalize_algorithm
from .greedy_gain import solve_channel_gain
from .oracle import DEFAULT_CAP, OracleCapExceeded, solve_optimal
from .plan import MulticastPlan, bs_broadcast_plan, coverage_by_hop, total_power, validate
from .scenario import generate, trial_seed

RNG_DESCRIPTION = "numpy PCG64 seeded by SeedSequence(entropy=master_seed, spawn_key=(c, trial))"

FIG3_C_VALUES = (1, 2, 3, 5, 7, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100)
FIG3_ALGORITHMS = ("channel_gain", "cluster", "bs_broadcast")
FIG4_C = 100
FIG4_ALGORITHMS = ("channel_gain", "cluster")
TABLE2_C_VALUES = (1, 2, 3, 4, 5, 6, 7)
TABLE2_ALGORITHMS = ("channel_gain", "cluster", "optimal")


class InternalInvariantError(RuntimeError):
    """An algorithm emitted an infeasible plan. Always a bug."""


@dataclass
class ExperimentConfig:
    master_seed: int = 1
    trials: int = 1000
    c_values: tuple[int, ...] = TABLE2_C_VALUES
    algorithms: tuple[str, ...] = TABLE2_ALGORITHMS
    r_min: float = 10.0
    h_max_cluster: int = 10
    h_max_optimal: int | None = None
    radius_m: float = 500.0
    params: ChannelParams = field(default_factory=ChannelParams)
    schedule: ThresholdSchedule = field(default_factory=ThresholdSchedule)
    oracle_cap: int = DEFAULT_CAP
    threads: int = 1

    def __post_init__(self):
        self.algorithms = tuple(normalize_algorithm(a) for a in self.algorithms)
        self.c_values = tuple(int(c) for c in self.c_values)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if "optimal" in self.algorithms and self.c_values and max(self.c_values) > self.oracle_cap:
            raise OracleCapExceeded(f"optimal requested for C={max(self.c_values)} above the oracle cap {self.oracle_cap}")

    @classmethod
    def from_run_config(cls, cfg: RunConfig, c_values, algorithms) -> "ExperimentConfig":
        threads = cfg.threads or os.cpu_count() or 1
        return cls(
            master_seed=cfg.master_seed,
            trials=cfg.trials,
            c_values=tuple(cfg.c_values) if cfg.c_values is not None else tuple(c_values),
            algorithms=tuple(cfg.algorithms) if cfg.algorithms is not None else tuple(algorithms),
            r_min=cfg.r_min,
            h_max_cluster=cfg.h_max_cluster,
            h_max_optimal=cfg.h_max_optimal,
            radius_m=cfg.radius_m,
            params=cfg.params,
            schedule=cfg.schedule,
            oracle_cap=cfg.oracle_cap,
            threads=threads,
        )


def solve(algorithm: str, gains: np.ndarray, cfg: ExperimentConfig) -> MulticastPlan:
    """Run one named algorithm on a gain matrix."""
    algorithm = normalize_algorithm(algorithm)
    if algorithm == "channel_gain":
        return solve_channel_gain(gains)
    if algorithm == "cluster":
        return solve_cluster(gains, cfg.r_min, cfg.h_max_cluster, cfg.params, cfg.radius_m, cfg.schedule)
    if algorithm == "optimal":
        return solve_optimal(gains, cfg.r_min, cfg.params, cfg.h_max_optimal, cap=cfg.oracle_cap)
    return bs_broadcast_plan(gains.shape[0] - 1)


@dataclass
class TrialOutcome:
    power_w: float
    hops: int
    coverage: list[float]


def run_trial(cfg: ExperimentConfig, c: int, trial: int) -> dict[str, TrialOutcome]:
    seed = trial_seed(cfg.master_seed, c, trial)
    _, gains = generate(seed, c, cfg.radius_m, cfg.params)
    out = {}
    for alg in cfg.algorithms:
        plan = solve(alg, gains, cfg)
        violations = validate(plan, gains, cfg.r_min, plan.h_max, cfg.params)
        if violations:
            detail = "; ".join(f"{v.constraint} {v.message}" for v in violations)
            raise InternalInvariantError(f"{alg} produced an infeasible plan (C={c}, trial={trial}, seed={seed}): {detail}")
        out[alg] = TrialOutcome(total_power(plan, gains, cfg.r_min, cfg.params), plan.num_hops, coverage_by_hop(plan))
    return out


def _run_task(args):
    cfg, c, trial = args
    return run_trial(cfg, c, trial)


@dataclass
class Cell:
    """Aggregate over trials of one (algorithm, C) pair."""

    powers: np.ndarray
    hops: np.ndarray
    coverage: list[list[float]]

    @property
    def trials(self) -> int:
        return len(self.powers)

    @property
    def mean_power(self) -> float:
        return float(np.mean(self.powers))

    @property
    def stderr(self) -> float:
        if self.trials < 2:
            return float("nan")
        return float(np.std(self.powers, ddof=1) / math.sqrt(self.trials))

    @property
    def mean_hops(self) -> float:
        return float(np.mean(self.hops))

    def mean_coverage(self, n_hops: int | None = None) -> list[float]:
        """Mean coverage curve; each trial's curve is held at 1.0 past its last hop."""
        longest = max((len(cv) for cv in self.coverage), default=0)
        n_hops = longest if n_hops is None else n_hops
        if n_hops == 0:
            return []
        mat = np.ones((len(self.coverage), n_hops))
        for i, cv in enumerate(self.coverage):
            k = min(len(cv), n_hops)
            mat[i, :k] = cv[:k]
        return [float(x) for x in mat.mean(axis=0)]


@dataclass
class AggregateResult:
    config: ExperimentConfig
    cells: dict[tuple[str, int], Cell]

    def cell(self, algorithm: str, c: int) -> Cell:
        return self.cells[(normalize_algorithm(algorithm), c)]

    def ratio_to_optimal(self, algorithm: str, c: int) -> float:
        """Mean of per-trial power ratios against the paired optimal plan."""
        mine = self.cell(algorithm, c).powers
        best = self.cell("optimal", c).powers
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(best > 0, mine / np.where(best > 0, best, 1.0), 1.0)
        return float(np.mean(r))


def run(cfg: ExperimentConfig) -> AggregateResult:
    """Run every (C, trial) pair and aggregate per algorithm."""
    tasks = [(cfg, c, t) for c in cfg.c_values for t in range(cfg.trials)]
    if cfg.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * cfg.threads))))
    else:
        results = [_run_task(t) for t in tasks]

    cells = {}
    for c in cfg.c_values:
        chunk = [r for (_, cc, _), r in zip(tasks, results) if cc == c]
        for alg in cfg.algorithms:
            outs = [r[alg] for r in chunk]
            cells[(alg, c)] = Cell(
                powers=np.array([o.power_w for o in outs]),
                hops=np.array([o.hops for o in outs]),
                coverage=[o.coverage for o in outs],
            )
    return AggregateResult(cfg, cells)


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


FIG3_HEADER = ("c", "algorithm", "mean_power_w", "stderr_w", "trials")
FIG4_HEADER = ("hop", "algorithm", "mean_coverage")
TABLE2_HEADER = ("c", "algorithm", "mean_power_w", "ratio_to_optimal")


def fig3_rows(result: AggregateResult) -> list[tuple]:
    cfg = result.config
    rows = []
    for c in cfg.c_values:
        for alg in cfg.algorithms:
            cell = result.cell(alg, c)
            rows.append((c, alg, _fmt(cell.mean_power), _fmt(cell.stderr), cell.trials))
    return rows


def fig4_rows(result: AggregateResult) -> list[tuple]:
    cfg = result.config
    rows = []
    for c in cfg.c_values:
        n_hops = max(len(cv) for alg in cfg.algorithms for cv in result.cell(alg, c).coverage)
        for alg in cfg.algorithms:
            for hop, cov in enumerate(result.cell(alg, c).mean_coverage(n_hops), start=1):
                rows.append((hop, alg, _fmt(cov)))
    return rows


def table2_rows(result: AggregateResult) -> list[tuple]:
    cfg = result.config
    rows = []
    for c in cfg.c_values:
        for alg in cfg.algorithms:
            ratio = result.ratio_to_optimal(alg, c) if "optimal" in cfg.algorithms else float("nan")
            rows.append((c, alg, _fmt(result.cell(alg, c).mean_power), _fmt(ratio)))
    return rows


def fig3_sweep(cfg: ExperimentConfig) -> tuple[AggregateResult, str]:
    result = run(cfg)
    return result, _csv(FIG3_HEADER, fig3_rows(result))


def fig4_coverage(cfg: ExperimentConfig) -> tuple[AggregateResult, str]:
    result = run(cfg)
    return result, _csv(FIG4_HEADER, fig4_rows(result))


def table2(cfg: ExperimentConfig) -> tuple[AggregateResult, str]:
    result = run(cfg)
    return result, _csv(TABLE2_HEADER, table2_rows(result))


EXPERIMENTS = {
    "fig3": (fig3_sweep, "fig3.csv", FIG3_C_VALUES, FIG3_ALGORITHMS),
    "fig4": (fig4_coverage, "fig4.csv", (FIG4_C,), FIG4_ALGORITHMS),
    "table2": (table2, "table2.csv", TABLE2_C_VALUES, TABLE2_ALGORITHMS),
}


def manifest(name: str, run_cfg: RunConfig, cfg: ExperimentConfig, outputs: list[str]) -> str:
    """Run manifest. Free of timestamps, host details, output location and thread count."""
    doc = {
        "experiment": name,
        "package": "d2dmcast",
        "version": __version__,
        "rng": RNG_DESCRIPTION,
        "config": {k: v for k, v in run_cfg.to_dict().items() if k not in ("threads", "output_dir")},
        "resolved": {
            "c_values": list(cfg.c_values),
            "algorithms": list(cfg.algorithms),
            "n0_w": cfg.params.n0_w,
        },
        "outputs": outputs,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_experiment(name: str, run_cfg: RunConfig) -> tuple[AggregateResult, dict[str, str]]:
    """Run a named experiment; returns the result and ``{filename: content}``."""
    func, filename, c_values, algorithms = EXPERIMENTS[name]
    cfg = ExperimentConfig.from_run_config(run_cfg, c_values, algorithms)
    result, text = func(cfg)
    files = {filename: text}
    files[f"{name}_manifest.json"] = manifest(name, run_cfg, cfg, [filename])
    return result, files


__all__ = ["ALGORITHMS", "AggregateResult", "ExperimentConfig", "run", "run_experiment", "solve"]
