"""Fixed-step RK4 for delay-differential equations on a uniform grid.

The delay must be an integer number of steps, so the delayed value at the
start and end of a step sits exactly on a stored sample; the midpoint value
used by the two inner RK4 stages is the average of the two neighbouring
samples.

Two paths share the same arithmetic:

* :func:`rk4_step` -- a readable pure-Python step against a
  :class:`HistoryBuffer`, used for checks and tiny spans;
* :func:`advance` -- the compiled loop used by everything else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError, IntegrationDiverged
from .models import Model, kernel_rhs

GRID_RTOL = 1e-9


def grid_steps(duration: float, dt: float, what: str = "duration") -> int:
    """Number of ``dt`` steps in ``duration``; rejects non-integral ratios."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    ratio = duration / dt
    k = round(ratio)
    if abs(ratio - k) > GRID_RTOL * max(1.0, abs(ratio)):
        raise ConfigurationError(f"{what}={duration} is not an integer multiple of dt={dt}")
    return int(k)


def delay_steps(tau: float, dt: float) -> int:
    k = grid_steps(tau, dt, "tau")
    if k < 1:
        raise ConfigurationError(f"tau={tau} must be at least one step dt={dt}")
    return k


class HistoryBuffer:
    """Ring buffer of past states on the integration grid.

    Holds ``delay_steps + 2`` samples; the newest sample is at ``head`` and
    corresponds to ``head_time``. Warm-up fills it with a constant state.
    """

    def __init__(self, tau: float, dt: float, initial: complex, t0: float = 0.0):
        self.tau = tau
        self.dt = dt
        self.delay_steps = delay_steps(tau, dt)
        self.samples = np.full(self.delay_steps + 2, complex(initial), dtype=np.complex128)
        self.head = 0
        self.t0 = t0
        self.steps = 0

    @property
    def capacity(self) -> int:
        return self.samples.shape[0]

    @property
    def head_time(self) -> float:
        return self.t0 + self.steps * self.dt

    @property
    def newest(self) -> complex:
        return complex(self.samples[self.head])

    def _sample(self, back: int) -> complex:
        return complex(self.samples[(self.head - back) % self.capacity])

    def lookup(self, t: float) -> complex:
        """State at time ``t``; linear interpolation between grid samples."""
        back = (self.head_time - t) / self.dt
        # snap to whole and half steps so midpoint lookups weight exactly 0.5
        nearest = round(2.0 * back) / 2.0
        if abs(back - nearest) <= GRID_RTOL * max(1.0, abs(back)):
            back = nearest
        if back < 0 or back > self.capacity - 1:
            raise IndexError(
                f"t={t} outside stored history [{self.head_time - (self.capacity - 1) * self.dt}, "
                f"{self.head_time}]"
            )
        hi = math.ceil(back)  # older sample
        lo = math.floor(back)
        if hi == lo:
            return self._sample(lo)
        w = back - lo  # weight of the older sample
        return (1.0 - w) * self._sample(lo) + w * self._sample(hi)

    def push(self, z: complex) -> None:
        self.head = (self.head + 1) % self.capacity
        self.samples[self.head] = z
        self.steps += 1


@dataclass(frozen=True)
class DriveSignal:
    """Masked, piecewise-constant injection ``eta * g(t) * u_n``.

    Input ``u_n`` is held on ``[n*T, (n+1)*T)``; within each clock cycle the
    mask value ``g`` changes every ``node_separation``.
    """

    inputs: np.ndarray
    mask: np.ndarray
    clock_cycle: float
    node_separation: float
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "inputs", np.asarray(self.inputs, dtype=np.float64))
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=np.float64))
        n_v = self.mask.shape[0]
        if abs(self.node_separation * n_v - self.clock_cycle) > GRID_RTOL * self.clock_cycle:
            raise ConfigurationError(
                f"node_separation*N_V = {self.node_separation * n_v} != clock_cycle {self.clock_cycle}"
            )

    def value_at(self, t):
        """Drive value at time(s) ``t``; zero outside the input window."""
        t = np.asarray(t, dtype=np.float64)
        n = np.floor(t / self.clock_cycle).astype(np.int64)
        m = np.floor((t - n * self.clock_cycle) / self.node_separation).astype(np.int64)
        m = np.clip(m, 0, self.mask.shape[0] - 1)
        inside = (n >= 0) & (n < self.inputs.shape[0])
        n_safe = np.where(inside, n, 0)
        if self.inputs.shape[0] == 0:
            values = np.zeros_like(t)
        else:
            values = np.where(inside, self.eta * self.mask[m] * self.inputs[n_safe], 0.0)
        return values if values.ndim else float(values)

    def levels(self) -> np.ndarray:
        """Drive value of every node interval, input-major."""
        return (self.eta * np.outer(self.inputs, self.mask)).ravel()


def rk4_step(
    model: Model,
    state: complex,
    history: HistoryBuffer,
    drive: DriveSignal | None,
    t: float,
    dt: float,
) -> complex:
    """Advance ``state`` from ``t`` to ``t + dt`` and append it to ``history``."""
    tau = model.params.tau
    d0 = history.lookup(t - tau)
    dh = history.lookup(t + 0.5 * dt - tau)
    d1 = history.lookup(t + dt - tau)
    u = 0.0 if drive is None else drive.value_at(t + 0.5 * dt)
    f = model.rhs
    k1 = f(state, d0, u)
    k2 = f(state + 0.5 * dt * k1, dh, u)
    k3 = f(state + 0.5 * dt * k2, dh, u)
    k4 = f(state + dt * k3, d1, u)
    new = state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not (math.isfinite(new.real) and math.isfinite(new.imag)):
        raise IntegrationDiverged(t, state)
    history.push(new)
    return new


@numba.njit(cache=True)
def _advance_kernel(code, p, z, hist, head, n_delay, dt, levels, steps_per_level, out):
    nh = hist.shape[0]
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(levels.shape[0]):
        u = levels[i]
        for s in range(steps_per_level):
            i0 = (head - n_delay + nh) % nh
            d0 = hist[i0]
            d1 = hist[(i0 + 1) % nh]
            dh = 0.5 * d0 + 0.5 * d1
            k1 = kernel_rhs(code, p, z, d0, u)
            k2 = kernel_rhs(code, p, z + half * k1, dh, u)
            k3 = kernel_rhs(code, p, z + half * k2, dh, u)
            k4 = kernel_rhs(code, p, z + dt * k3, d1, u)
            new = z + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not (math.isfinite(new.real) and math.isfinite(new.imag)):
                return z, head, i * steps_per_level + s
            z = new
            head = (head + 1) % nh
            hist[head] = z
        out[i] = z
    return z, head, -1


def advance(
    model: Model,
    state: complex,
    history: HistoryBuffer,
    levels: np.ndarray,
    steps_per_level: int,
) -> tuple[complex, np.ndarray]:
    """Integrate through consecutive constant-drive intervals.

    ``levels[i]`` is held for ``steps_per_level`` steps. Returns the final
    state and the state at the end of every interval. ``history`` is
    updated in place.
    """
    code, packed = model.kernel_args()
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    out = np.empty(levels.shape[0], dtype=np.complex128)
    if history.delay_steps != delay_steps(model.params.tau, history.dt):
        raise ConfigurationError("history buffer was built for a different delay")
    t_start = history.head_time
    z, head, failed = _advance_kernel(
        code, packed, complex(state), history.samples, history.head, history.delay_steps,
        history.dt, levels, int(steps_per_level), out,
    )
    done = levels.shape[0] * steps_per_level if failed < 0 else failed
    history.head = head
    history.steps += done
    if failed >= 0:
        raise IntegrationDiverged(t_start + failed * history.dt, complex(z))
    return complex(z), out


@dataclass(frozen=True)
class Trajectory:
    t0: float
    dt: float
    states: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.states.shape[0])

    @property
    def final(self) -> complex:
        return complex(self.states[-1])

    def at(self, t: float) -> complex:
        k = grid_steps(t - self.t0, self.dt, "t - t0")
        if not 0 <= k < self.states.shape[0]:
            raise IndexError(f"t={t} outside trajectory span")
        return complex(self.states[k])


def integrate_span(
    model: Model,
    initial: complex,
    drive: DriveSignal | None,
    t0: float,
    t1: float,
    dt: float = 0.01,
) -> Trajectory:
    """Integrate from ``t0`` to ``t1`` with constant warm-up history.

    The history on ``[t0 - tau, t0]`` equals ``initial``.
    """
    if t1 < t0:
        raise ValueError(f"t1={t1} precedes t0={t0}")
    n = grid_steps(t1 - t0, dt, "t1 - t0")
    history = HistoryBuffer(model.params.tau, dt, initial, t0)
    states = np.empty(n + 1, dtype=np.complex128)
    states[0] = initial
    if n:
        if drive is None:
            levels = np.zeros(n)
        else:
            levels = np.asarray(drive.value_at(t0 + dt * (np.arange(n) + 0.5)), dtype=np.float64)
        _, states[1:] = advance(model, complex(initial), history, levels, 1)
    return Trajectory(t0, dt, states)
