"""Run protocol and parameter scans.

Every point follows the same protocol: settle without drive, discard a
buffer of driven inputs, harvest the training inputs, measure the Legendre
capacities, then (optionally) repeat on a fresh reservoir with NARMA10
inputs. Points are independent; scans keep canonical point order whatever
the worker count.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import CapacityTable, enumerate_and_measure, write_capacity_rows
from .config import ExperimentConfig
from .errors import (
    ConfigurationError,
    IntegrationDiverged,
    NarmaDivergence,
    UndefinedStatisticError,
)
from .readout import CapacityProjector, nrmse, train_least_squares
from .reservoir import DelayReservoir, StateMatrix, TimingConfig, generate_mask
from .tasks import narma10_sequence

log = logging.getLogger(__name__)

POINT_ERRORS = (
    ConfigurationError,
    IntegrationDiverged,
    NarmaDivergence,
    UndefinedStatisticError,
    np.linalg.LinAlgError,
)


@dataclass
class PointResult:
    index: int
    tau: float
    clock_cycle: float
    status: str = "ok"
    error: str = ""
    table: CapacityTable | None = None
    narma_nrmse: float | None = None
    seeds: dict = field(default_factory=dict)
    states: StateMatrix | None = None
    inputs: np.ndarray | None = None

    def summary_row(self, degree_cap: int) -> dict:
        row = {
            "point": self.index,
            "tau": self.tau,
            "clock_cycle": self.clock_cycle,
            "status": self.status,
        }
        mc = self.table.mc_by_degree if self.table else {}
        row["MC"] = self.table.total_mc if self.table else None
        for d in range(1, degree_cap + 1):
            row[f"MC_{d}"] = mc.get(d) if self.table else None
        row["narma10_nrmse"] = self.narma_nrmse
        stats = self.table.stats if self.table else {}
        row["effective_rank"] = stats.get("effective_rank")
        row["max_clamp_excursion"] = stats.get("max_clamp_excursion")
        row["tasks_evaluated"] = stats.get("tasks_evaluated")
        row["tasks_recorded"] = stats.get("tasks_recorded")
        row["budget_exhausted"] = stats.get("budget_exhausted")
        row["error"] = self.error
        return row


def point_config(config: ExperimentConfig, tau: float, clock_cycle: float) -> tuple:
    params = config.reservoir.replace(tau=float(tau))
    timing = TimingConfig(float(clock_cycle), config.timing.virtual_nodes, config.timing.dt)
    return params, timing


def harvest(config: ExperimentConfig, params, timing, mask, inputs) -> np.ndarray:
    """Transient, then drive with ``inputs``; returns readouts of every input."""
    reservoir = DelayReservoir(params, timing, mask, config.model, config.initial)
    reservoir.settle(config.transient)
    return reservoir.drive(inputs)


def capacity_states(config: ExperimentConfig, tau: float, clock_cycle: float, index: int = 0):
    """Training state matrix and the full input stream (buffer + training)."""
    params, timing = point_config(config, tau, clock_cycle)
    seeds = config.point_seeds(index)
    mask = generate_mask(timing.virtual_nodes, seeds["mask"])
    u = np.random.default_rng(seeds["inputs"]).uniform(-1.0, 1.0, config.n_buffer + config.n_train)
    readouts = harvest(config, params, timing, mask, u)
    return StateMatrix(readouts[config.n_buffer :]), u, seeds


def narma10_error(config: ExperimentConfig, tau: float, clock_cycle: float, index: int = 0) -> float:
    """Out-of-sample NARMA10 NRMSE; the readout (with bias) predicts A_{n+1}
    from the state after u_n."""
    params, timing = point_config(config, tau, clock_cycle)
    seeds = config.point_seeds(index)
    mask = generate_mask(timing.virtual_nodes, seeds["mask"])
    v = np.random.default_rng(seeds["narma_inputs"]).uniform(0.0, 0.5, config.n_buffer + config.n_train)
    targets = narma10_sequence(v)
    readouts = harvest(config, params, timing, mask, v)
    skip = max(config.n_buffer, config.narma.warmup)
    states, targets = readouts[skip:], targets[skip:]
    split = int(round(states.shape[0] * (1.0 - config.narma.test_fraction)))
    readout = train_least_squares(states[:split], targets[:split], with_bias=True)
    return nrmse(readout.predict(states[split:]), targets[split:])


def run_point(
    config: ExperimentConfig,
    tau: float | None = None,
    clock_cycle: float | None = None,
    index: int = 0,
    keep_states: bool = False,
) -> PointResult:
    tau = config.reservoir.tau if tau is None else float(tau)
    clock_cycle = config.timing.clock_cycle if clock_cycle is None else float(clock_cycle)
    result = PointResult(index, tau, clock_cycle)
    try:
        result.seeds = config.point_seeds(index)
        states, u, _ = capacity_states(config, tau, clock_cycle, index)
        cap = config.capacity
        projector = CapacityProjector(states, rtol=cap.rtol_for(states.n_cols))
        result.table = enumerate_and_measure(
            states,
            u,
            degree_cap=cap.degree_cap,
            lag_cap=cap.lag_cap,
            threshold=cap.threshold,
            dead_window=cap.dead_window,
            min_lag=cap.min_lag,
            max_tasks=cap.max_tasks,
            projector=projector,
        )
        if keep_states:
            result.states, result.inputs = states, u
        if config.narma.enabled:
            try:
                result.narma_nrmse = narma10_error(config, tau, clock_cycle, index)
            except NarmaDivergence as exc:
                # the capacity results stay valid; only the benchmark is missing
                result.error = f"narma10: {exc}"
    except ConfigurationError as exc:
        result.status, result.error = "infeasible", str(exc)
    except POINT_ERRORS as exc:
        result.status, result.error = "failed", f"{type(exc).__name__}: {exc}"
    if result.status != "ok":
        log.warning("point %d (tau=%g, T=%g) %s: %s", index, tau, clock_cycle, result.status, result.error)
    return result


def _run_indexed(args) -> PointResult:
    config, tau, clock_cycle, index = args
    return run_point(config, tau, clock_cycle, index)


def run_points(config: ExperimentConfig, points: list[tuple[float, float]]) -> list[PointResult]:
    jobs = [(config, tau, T, i) for i, (tau, T) in enumerate(points)]
    if config.workers == 1 or len(jobs) == 1:
        results = [_run_indexed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    return sorted(results, key=lambda r: r.index)


def scan_tau(config: ExperimentConfig, taus=None) -> list[PointResult]:
    taus = config.scan.tau if taus is None else tuple(float(t) for t in taus)
    if not taus:
        raise ConfigurationError("empty tau range")
    return run_points(config, [(tau, config.timing.clock_cycle) for tau in taus])


def scan_grid(config: ExperimentConfig, taus=None, clock_cycles=None) -> list[PointResult]:
    """Outer loop over clock cycle, inner over delay."""
    taus = config.scan.tau if taus is None else tuple(float(t) for t in taus)
    clock_cycles = config.scan.clock_cycle if clock_cycles is None else tuple(float(t) for t in clock_cycles)
    if not taus or not clock_cycles:
        raise ConfigurationError("empty scan range")
    return run_points(config, [(tau, T) for T in clock_cycles for tau in taus])


# -- output -----------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_rows(path: Path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for row in rows:
            w.writerow([fmt(v) for v in row.values()])


def write_summary(path: Path, results: list[PointResult], degree_cap: int) -> None:
    write_rows(path, [r.summary_row(degree_cap) for r in results])


def write_capacities(path: Path, results: list[PointResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "task_id", "lags", "degrees", "total_degree", "capacity"])
        for r in results:
            if r.table is not None:
                write_capacity_rows(w, r.table, point_id=r.index)


def write_meta(path: Path, config: ExperimentConfig, command: str, results=(), extra=None) -> None:
    meta = {
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "version": __version__,
        "config": config.to_dict(),
        "conventions": {
            "readout": "|Z|^2 at t_n + m*theta, m = 1..N_V",
            "legendre": "sqrt(2d+1) * P_d on inputs uniform in [-1, 1]",
            "lag_0": "input held during the sampled clock cycle",
            "capacity": "in-sample, centred states and targets, no bias column",
            "pinv_rtol": config.capacity.rtol_for(config.timing.virtual_nodes),
        },
        "points": [
            {
                "point": r.index,
                "tau": r.tau,
                "clock_cycle": r.clock_cycle,
                "status": r.status,
                "seeds": r.seeds,
                "pruning": _jsonable(r.table.stats) if r.table else None,
            }
            for r in results
        ],
    }
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def _jsonable(stats: dict) -> dict:
    return {k: ({str(kk): vv for kk, vv in v.items()} if isinstance(v, dict) else v)
            for k, v in stats.items()}


def write_scan_outputs(out_dir, config: ExperimentConfig, results: list[PointResult], command: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.csv", results, config.capacity.degree_cap)
    write_capacities(out / "capacities.csv", results)
    write_meta(out / "meta.json", config, command, results)
    return out

