"""Monte Carlo replication runner, percentile statistics, sensitivity
sweeps, and plot-ready report files.

Each replication draws one demand realization and runs it through both
service modes (common random numbers), so per-replication cost
differences are paired.  Passenger costs aggregate the warm-up counting
window only; operator costs accrue for every departure in the horizon.
Replication r of a run seeded with s uses the independent substream
SeedSequence(s, spawn_key=(r,)), so results are identical for any worker
count and execution order.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .model import MetricSummary, Scenario, ScenarioStats, ServiceConfig, require_valid
from .simulator import sample_requests, simulate_requests

METRICS = (
    "avg_wait_min",
    "avg_ivtt_min",
    "access_cost",
    "waiting_cost",
    "riding_cost",
    "operator_cost",
    "generalized_cost",
    "passengers",
)

TABLE_ROWS = METRICS[:7] + ("generalized_cost_diff", "passengers")

HIST_BINS = 30


def summarize(values: Sequence[float]) -> MetricSummary:
    """Median and the empirical 2.5/97.5 percentiles (linear interpolation
    of order statistics)."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("empty input")
    lo, med, hi = np.percentile(arr, [2.5, 50.0, 97.5])
    return MetricSummary(median=float(med), p2_5=float(lo), p97_5=float(hi))


def replication_metrics(scenario: Scenario, requests, logs) -> dict:
    """Aggregate one replication to the reported metrics.

    Averages cover passengers whose request time falls in the warm-up
    counting window and who were actually served; operator cost covers
    every departure.
    """
    cost, svc = scenario.cost, scenario.service
    w0, w1 = svc.warmup_window
    t_k = {r.id: r.t_k for r in requests}
    counted = 0
    wait_sum = ivtt_sum = access_sum = 0.0
    c_o = 0.0
    for log in logs:
        c_o += log.costs.c_o
        for rid, outcome in zip(log.served_ids, log.costs.per_passenger):
            if w0 <= t_k[rid] < w1:
                counted += 1
                wait_sum += outcome.wait
                ivtt_sum += outcome.ivtt
                access_sum += outcome.access
    c_a = cost.gamma_a * cost.vot * access_sum
    c_w = cost.gamma_w * cost.vot * wait_sum
    c_r = cost.gamma_r * cost.vot * ivtt_sum
    return {
        "avg_wait_min": 60.0 * wait_sum / counted if counted else 0.0,
        "avg_ivtt_min": 60.0 * ivtt_sum / counted if counted else 0.0,
        "access_cost": c_a,
        "waiting_cost": c_w,
        "riding_cost": c_r,
        "operator_cost": c_o,
        "generalized_cost": c_a + c_w + c_r + c_o,
        "passengers": float(counted),
    }


@dataclass(frozen=True)
class ScenarioRun:
    scenario_name: str
    modes: tuple
    stats: tuple  # ScenarioStats per mode, same order
    delta_tc: MetricSummary  # second mode minus first, per replication
    delta_tc_values: tuple
    replications: int
    seed: tuple

    def stats_for(self, mode: str) -> ScenarioStats:
        return self.stats[self.modes.index(mode)]

    @property
    def fixed(self) -> ScenarioStats:
        return self.stats_for("fixed")

    @property
    def amsod(self) -> ScenarioStats:
        return self.stats_for("amsod")


def _entropy(seed) -> tuple:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def _one_replication(args):
    scenario, mode_scenarios, modes, entropy, rep = args
    ss = np.random.SeedSequence(entropy=list(entropy), spawn_key=(rep,))
    requests = sample_requests(scenario.grid, scenario.service, np.random.default_rng(ss))
    per_mode = []
    for mode, scn in zip(modes, mode_scenarios):
        logs = simulate_requests(scn, mode, requests)
        per_mode.append(replication_metrics(scn, requests, logs))
    return rep, tuple(per_mode)


def run_scenario(
    scenario: Scenario,
    replications: Optional[int] = None,
    seed=None,
    workers: int = 1,
    modes: tuple = ("fixed", "amsod"),
    amsod_service: Optional[ServiceConfig] = None,
) -> ScenarioRun:
    """Paired Monte Carlo for two service modes on common demand draws.

    amsod_service, when given, replaces the service design for the
    on-demand side only (capacity sensitivity keeps the incumbent
    fixed-route bus unchanged); demand and horizon must match so the
    request realizations stay shared.
    """
    require_valid(scenario)
    J = scenario.replications if replications is None else int(replications)
    if J < 1:
        raise ValueError("replications must be >= 1")
    entropy = _entropy(scenario.seed if seed is None else seed)

    mode_scenarios = []
    for mode in modes:
        if mode == "amsod" and amsod_service is not None:
            svc = amsod_service
            base = scenario.service
            if (svc.demand_rate, svc.horizon, svc.warmup_window) != (
                base.demand_rate,
                base.horizon,
                base.warmup_window,
            ):
                raise ValueError("amsod_service must keep demand and horizon of the base scenario")
            mode_scenarios.append(replace(scenario, service=svc))
        else:
            mode_scenarios.append(scenario)

    jobs = [(scenario, tuple(mode_scenarios), tuple(modes), entropy, rep) for rep in range(J)]
    if workers <= 1:
        results = [_one_replication(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replication, jobs, chunksize=max(1, J // (workers * 8))))
    results.sort(key=lambda item: item[0])

    per_mode_values = [{m: [] for m in METRICS} for _ in modes]
    delta = []
    for _, per_mode in results:
        for k, metrics in enumerate(per_mode):
            for m in METRICS:
                per_mode_values[k][m].append(metrics[m])
        delta.append(per_mode[-1]["generalized_cost"] - per_mode[0]["generalized_cost"])

    stats = tuple(
        ScenarioStats(metrics={m: summarize(vals[m]) for m in METRICS}, replications=J)
        for vals in per_mode_values
    )
    return ScenarioRun(
        scenario_name=scenario.name,
        modes=tuple(modes),
        stats=stats,
        delta_tc=summarize(delta),
        delta_tc_values=tuple(delta),
        replications=J,
        seed=entropy,
    )


@dataclass(frozen=True)
class SweepSpec:
    dimension: str  # "capacity" | "lambda"
    values: tuple
    replications: int
    scenario: Scenario

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.dimension not in ("capacity", "lambda"):
            raise ValueError(f"unknown sweep dimension {self.dimension!r}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    value: float
    delta_tc_median: float
    fixed_wait_min: float
    fixed_ivtt_min: float
    amsod_wait_min: float
    amsod_ivtt_min: float


@dataclass(frozen=True)
class SweepResult:
    dimension: str
    rows: tuple
    runs: tuple


def sweep(spec: SweepSpec, seed=None, workers: int = 1) -> SweepResult:
    """One run_scenario per value; value index i runs on substream
    (seed, i), fixed per index for reproducibility.

    A capacity sweep sizes the on-demand minibus only; the fixed-route
    baseline keeps the scenario's own capacity.  A demand sweep moves
    both services together.
    """
    base = spec.scenario
    master = base.seed if seed is None else seed
    rows = []
    runs = []
    for idx, value in enumerate(spec.values):
        if spec.dimension == "capacity":
            scn = base
            amsod_svc = replace(base.service, capacity=int(value))
        else:
            scn = replace(base, service=replace(base.service, demand_rate=float(value)))
            amsod_svc = None
        run = run_scenario(
            scn,
            replications=spec.replications,
            seed=_entropy(master) + (idx,),
            workers=workers,
            amsod_service=amsod_svc,
        )
        rows.append(
            SweepRow(
                value=value,
                delta_tc_median=run.delta_tc.median,
                fixed_wait_min=run.fixed.metrics["avg_wait_min"].median,
                fixed_ivtt_min=run.fixed.metrics["avg_ivtt_min"].median,
                amsod_wait_min=run.amsod.metrics["avg_wait_min"].median,
                amsod_ivtt_min=run.amsod.metrics["avg_ivtt_min"].median,
            )
        )
        runs.append(run)
    return SweepResult(dimension=spec.dimension, rows=tuple(rows), runs=tuple(runs))


# --- report emission ---------------------------------------------------------


def sig4(x: float) -> str:
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.4g}"


def _cell(s: MetricSummary) -> str:
    return f"{sig4(s.median)} ({sig4(s.p2_5)} - {sig4(s.p97_5)})"


def delta_tc_histogram(values: Sequence[float], bins: int = HIST_BINS):
    """Equal-width bins spanning the empirical 0.5-99.5 percentile range."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("empty input")
    lo, hi = np.percentile(arr, [0.5, 99.5])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(arr, bins=bins, range=(lo, hi))
    return counts, edges


def run_to_dict(run: ScenarioRun) -> dict:
    return {
        "scenario": run.scenario_name,
        "modes": list(run.modes),
        "replications": run.replications,
        "seed": list(run.seed),
        "stats": {
            mode: {
                m: {"median": s.median, "p2_5": s.p2_5, "p97_5": s.p97_5}
                for m, s in stats.metrics.items()
            }
            for mode, stats in zip(run.modes, run.stats)
        },
        "delta_tc": {
            "median": run.delta_tc.median,
            "p2_5": run.delta_tc.p2_5,
            "p97_5": run.delta_tc.p97_5,
        },
    }


def emit_report(run: ScenarioRun, out_dir: Union[str, Path], fmt: str = "csv") -> list:
    """Write the scenario report; returns the written paths.

    csv: metric table (one row per metric, cells "median (p2.5 - p97.5)"),
    the cost-difference histogram bins, and the full-precision JSON.
    json: the JSON only.
    """
    if not run.delta_tc_values:
        raise ValueError("empty input")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = run.scenario_name
    written = []

    json_path = out_dir / f"{name}_stats.json"
    json_path.write_text(json.dumps(run_to_dict(run), indent=2, sort_keys=True) + "\n")
    written.append(json_path)
    if fmt == "json":
        return written

    table_path = out_dir / f"{name}_table.csv"
    with open(table_path, "w", newline="") as fh:
        fh.write("metric," + ",".join(run.modes) + "\n")
        for row in TABLE_ROWS:
            if row == "generalized_cost_diff":
                cells = [_cell(run.delta_tc)] + [""] * (len(run.modes) - 1)
            else:
                cells = [_cell(stats.metrics[row]) for stats in run.stats]
            fh.write(row + "," + ",".join(f'"{c}"' if c else "" for c in cells) + "\n")
    written.append(table_path)

    counts, edges = delta_tc_histogram(run.delta_tc_values)
    hist_path = out_dir / f"{name}_delta_tc_hist.csv"
    with open(hist_path, "w", newline="") as fh:
        fh.write("bin_left,bin_right,count\n")
        for i, c in enumerate(counts):
            fh.write(f"{edges[i]!r},{edges[i + 1]!r},{int(c)}\n")
    written.append(hist_path)
    return written


def emit_sweep(result: SweepResult, scenario_name: str, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{scenario_name}_{result.dimension}_sweep.csv"
    with open(path, "w", newline="") as fh:
        fh.write("value,delta_tc_median,fixed_wait_min,fixed_ivtt_min,amsod_wait_min,amsod_ivtt_min\n")
        for row in result.rows:
            fh.write(
                ",".join(
                    [
                        sig4(row.value),
                        repr(row.delta_tc_median),
                        repr(row.fixed_wait_min),
                        repr(row.fixed_ivtt_min),
                        repr(row.amsod_wait_min),
                        repr(row.amsod_ivtt_min),
                    ]
                )
                + "\n"
            )
    return path
