"""Legendre-product tasks and degree-resolved memory capacities.

A task is a set of ``(lag, degree)`` terms with distinct lags; its target is
the product of normalised Legendre polynomials ``sqrt(2d+1) P_d`` evaluated on
the input ``lag`` steps in the past. Normalisation gives every factor unit
second moment under inputs uniform on [-1, 1].

Inputs are passed as one array whose last ``N`` entries are the inputs of the
``N`` state rows; the entries before them supply the lagged history. Lag 0 is
the input held while the row was sampled.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
import numpy as np

from .readout import CapacityProjector

DEGREE_CAP = 10
LAG_CAP = 1000
THRESHOLD = 1e-3
DEAD_WINDOW = 10
MIN_LAG = 0


def legendre_eval(degree: int, u, normalized: bool = True):
    """P_d(u) by the three-term recurrence, optionally scaled by sqrt(2d+1)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    u = np.asarray(u, dtype=np.float64)
    if np.any(np.abs(u) > 1.0):
        raise ValueError("Legendre arguments must lie in [-1, 1]")
    p_prev, p = np.ones_like(u), u.copy()
    if degree == 0:
        p = p_prev
    else:
        for k in range(1, degree):
            p_prev, p = p, ((2 * k + 1) * u * p - k * p_prev) / (k + 1)
    if normalized:
        p = math.sqrt(2 * degree + 1) * p
    return p if p.ndim else float(p)


@dataclass(frozen=True, order=True)
class LegendreTask:
    """Canonical task: terms sorted by decreasing lag."""

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        terms = tuple(sorted(((int(l), int(d)) for l, d in self.terms), reverse=True))
        lags = [l for l, _ in terms]
        if not terms:
            raise ValueError("a task needs at least one term")
        if len(set(lags)) != len(lags):
            raise ValueError(f"duplicate lags in {terms}")
        if any(l < 0 or d < 1 for l, d in terms):
            raise ValueError(f"lags must be >= 0 and degrees >= 1: {terms}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *terms: tuple[int, int]) -> "LegendreTask":
        return cls(tuple(terms))

    @property
    def total_degree(self) -> int:
        return sum(d for _, d in self.terms)

    @property
    def max_lag(self) -> int:
        return self.terms[0][0]

    @property
    def lags(self) -> tuple[int, ...]:
        return tuple(l for l, _ in self.terms)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.terms)

    @property
    def task_id(self) -> str:
        return "*".join(f"P{d}(u[n-{l}])" for l, d in self.terms)


def build_target(task: LegendreTask, inputs, start: int | None = None) -> np.ndarray:
    """target[n] = prod_terms sqrt(2d+1) P_d(u[n - lag]) for n = start .. len-1."""
    u = np.asarray(inputs, dtype=np.float64)
    if start is None:
        start = task.max_lag
    if start < task.max_lag:
        raise IndexError(f"start={start} leaves no history for lag {task.max_lag}")
    n = u.shape[0] - start
    out = np.ones(max(n, 0))
    for lag, degree in task.terms:
        out *= legendre_eval(degree, u[start - lag : start - lag + n])
    return out


@dataclass
class CapacityTable:
    records: list[tuple[LegendreTask, float]] = field(default_factory=list)
    threshold: float = THRESHOLD
    degree_cap: int = DEGREE_CAP
    stats: dict = field(default_factory=dict)

    @property
    def mc_by_degree(self) -> dict[int, float]:
        mc = {d: 0.0 for d in range(1, self.degree_cap + 1)}
        for task, c in self.records:
            if c >= self.threshold:
                mc[task.total_degree] += c
        return mc

    @property
    def total_mc(self) -> float:
        return float(sum(self.mc_by_degree.values()))

    def capacity_of(self, task: LegendreTask) -> float:
        for t, c in self.records:
            if t == task:
                return c
        return 0.0

    def write_csv(self, path, point_id: int | None = None) -> None:
        with open(path, "w", newline="") as fh:
            write_capacity_rows(csv.writer(fh, lineterminator="\n"), self, point_id, header=True)

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["degree", "MC_d"])
            for d, v in self.mc_by_degree.items():
                w.writerow([d, f"{v:.12g}"])
            w.writerow(["total", f"{self.total_mc:.12g}"])


def write_capacity_rows(writer, table: CapacityTable, point_id=None, header=False) -> None:
    prefix = [] if point_id is None else [point_id]
    if header:
        writer.writerow((["point"] if point_id is not None else [])
                        + ["task_id", "lags", "degrees", "total_degree", "capacity"])
    for task, c in sorted(table.records):
        writer.writerow(prefix + [
            task.task_id,
            " ".join(map(str, task.lags)),
            " ".join(map(str, task.degrees)),
            task.total_degree,
            f"{c:.12g}",
        ])


class _TaskEvaluator:
    """Evaluates batches of Legendre-product targets against one projector.

    Each normalised polynomial of the whole input stream is computed once;
    a lagged factor is then a slice of it.
    """

    def __init__(self, projector: CapacityProjector, inputs, degree_cap: int, lag_cap: int):
        u = np.asarray(inputs, dtype=np.float64)
        self.n = projector.n_rows
        self.offset = u.shape[0] - self.n
        if self.offset < lag_cap:
            raise IndexError(
                f"inputs provide {self.offset} steps of history; lag_cap={lag_cap} needs more"
            )
        self.projector = projector
        self.poly = {d: legendre_eval(d, u) for d in range(1, degree_cap + 1)}
        self.evaluated = 0

    def factor(self, lag: int, degree: int) -> np.ndarray:
        return self.poly[degree][self.offset - lag : self.offset - lag + self.n]

    def batch(self, prefix: np.ndarray | None, degree: int, lags: range) -> np.ndarray:
        cols = np.empty((self.n, len(lags)))
        for j, lag in enumerate(lags):
            cols[:, j] = self.factor(lag, degree)
        if prefix is not None:
            cols *= prefix[:, None]
        self.evaluated += len(lags)
        return self.projector.capacities(cols)


def enumerate_and_measure(
    states,
    inputs,
    degree_cap: int = DEGREE_CAP,
    lag_cap: int = LAG_CAP,
    threshold: float = THRESHOLD,
    dead_window: int = DEAD_WINDOW,
    min_lag: int = MIN_LAG,
    max_tasks: int | None = None,
    projector: CapacityProjector | None = None,
) -> CapacityTable:
    """Measure every Legendre-product task reachable by windowed pruning.

    For each total degree, tasks are visited in order of increasing maximum
    lag. Once ``dead_window`` consecutive maximum lags produce no task at or
    above ``threshold`` the degree is finished. Inside a fixed maximum lag the
    remaining terms are chosen recursively, next lag ascending from
    ``min_lag``, with the same windowed cutoff on every level. Only tasks at or
    above the threshold are recorded. ``max_tasks`` caps the number of
    evaluations; hitting it is reported in ``stats``.
    """
    if projector is None:
        projector = CapacityProjector(states)
    ev = _TaskEvaluator(projector, inputs, degree_cap, lag_cap)
    records: list[tuple[LegendreTask, float]] = []
    exhausted = False
    last_top: dict[int, int] = {}

    def over_budget() -> bool:
        nonlocal exhausted
        if max_tasks is not None and ev.evaluated >= max_tasks:
            exhausted = True
        return exhausted

    def extend(prefix, terms, max_lag, remaining) -> bool:
        """Complete ``terms`` with lags in [min_lag, max_lag]; True if any task survives."""
        any_alive = False
        dead = 0
        lag = min_lag
        while lag <= max_lag and dead < dead_window and not over_budget():
            chunk = range(lag, min(max_lag, lag + dead_window - 1) + 1)
            leaves = ev.batch(prefix, remaining, chunk)
            for j, l in enumerate(chunk):
                alive = False
                if leaves[j] >= threshold:
                    records.append((LegendreTask(terms + ((l, remaining),)), float(leaves[j])))
                    alive = True
                if l > min_lag:
                    for d in range(1, remaining):
                        p = ev.factor(l, d) if prefix is None else prefix * ev.factor(l, d)
                        alive |= extend(p, terms + ((l, d),), l - 1, remaining - d)
                any_alive |= alive
                dead = 0 if alive else dead + 1
                if dead >= dead_window:
                    break
            lag = chunk[-1] + 1
        return any_alive

    for degree in range(1, degree_cap + 1):
        dead = 0
        for top in range(min_lag, lag_cap + 1):
            if over_budget():
                break
            # every task whose largest lag is ``top``
            alive = extend(None, (), top, degree) if top == min_lag else False
            if top > min_lag:
                leaf = ev.batch(None, degree, range(top, top + 1))[0]
                if leaf >= threshold:
                    records.append((LegendreTask(((top, degree),)), float(leaf)))
                    alive = True
                for d in range(1, degree):
                    alive |= extend(ev.factor(top, d), ((top, d),), top - 1, degree - d)
            last_top[degree] = top
            dead = 0 if alive else dead + 1
            if dead >= dead_window:
                break

    records.sort()
    stats = {
        "tasks_evaluated": ev.evaluated,
        "tasks_recorded": len(records),
        "budget_exhausted": exhausted,
        "max_lag_reached": last_top,
        "effective_rank": projector.rank,
        "max_clamp_excursion": projector.max_excursion,
    }
    return CapacityTable(records, threshold, degree_cap, stats)


def linear_recall_profile(
    states, inputs, max_lag: int, projector=None, min_lag: int = 1
) -> list[tuple[int, float]]:
    """Capacities of the tasks {(lag, 1)} for lag = min_lag..max_lag."""
    if projector is None:
        projector = CapacityProjector(states)
    ev = _TaskEvaluator(projector, inputs, 1, max_lag)
    lags = range(min_lag, max_lag + 1)
    return [(lag, float(c)) for lag, c in zip(lags, ev.batch(None, 1, lags))]


def pair_quadratic_profile(
    states, inputs, max_lag1: int, max_lag2: int, projector=None, min_lag: int = 1
) -> dict[tuple[int, int], float]:
    """Degree-2 capacities keyed by lag pair.

    Off-diagonal keys are the products {(l1,1),(l2,1)}; both orderings map to
    the same task and value. Diagonal keys (l, l) hold the pure tasks {(l,2)}.
    """
    if projector is None:
        projector = CapacityProjector(states)
    top = max(max_lag1, max_lag2)
    ev = _TaskEvaluator(projector, inputs, 2, top)
    out: dict[tuple[int, int], float] = {}
    pure = ev.batch(None, 2, range(min_lag, top + 1))
    for l, c in zip(range(min_lag, top + 1), pure):
        out[(l, l)] = float(c)
    for l1 in range(min_lag + 1, top + 1):
        caps = ev.batch(ev.factor(l1, 1), 1, range(min_lag, l1))
        for l2, c in zip(range(min_lag, l1), caps):
            if (l1 <= max_lag1 and l2 <= max_lag2) or (l2 <= max_lag1 and l1 <= max_lag2):
                out[(l1, l2)] = out[(l2, l1)] = float(c)
    return out
