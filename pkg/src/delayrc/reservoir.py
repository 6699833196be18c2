"""Time-multiplexed reservoir: masking, driving and harvesting virtual nodes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .integrator import HistoryBuffer, advance, grid_steps
from .models import Model, ReservoirParams, get_model

DEFAULT_TRANSIENT = 10_000.0
DEFAULT_INITIAL = 0.1 + 0.0j


@dataclass(frozen=True)
class TimingConfig:
    clock_cycle: float = 80.0
    virtual_nodes: int = 50
    dt: float = 0.01

    def __post_init__(self):
        if self.virtual_nodes < 1:
            raise ConfigurationError("virtual_nodes must be >= 1")
        if self.clock_cycle <= 0:
            raise ConfigurationError("clock_cycle must be positive")
        self.steps_per_node  # validates theta/dt

    @property
    def node_separation(self) -> float:
        return self.clock_cycle / self.virtual_nodes

    @property
    def steps_per_node(self) -> int:
        k = grid_steps(self.node_separation, self.dt, "node separation")
        if k < 1:
            raise ConfigurationError(f"node separation {self.node_separation} shorter than dt")
        return k


@dataclass(frozen=True)
class Mask:
    values: np.ndarray
    seed: int | None = None

    def __len__(self):
        return self.values.shape[0]


def generate_mask(n_v: int, seed: int) -> Mask:
    """``n_v`` values i.i.d. uniform on [-1, 1] from a seeded generator."""
    if n_v < 1:
        raise ValueError("n_v must be >= 1")
    rng = np.random.default_rng(seed)
    return Mask(rng.uniform(-1.0, 1.0, n_v), seed)


@dataclass(frozen=True)
class StateMatrix:
    """Virtual-node readouts: row n holds |Z|^2 at t_n + m*theta, m = 1..N_V."""

    values: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def column_means(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def centered(self) -> np.ndarray:
        return self.values - self.column_means

    def to_csv(self, path) -> None:
        header = ",".join(f"node_{m + 1}" for m in range(self.n_cols))
        np.savetxt(path, self.values, delimiter=",", header=header, comments="", fmt="%.12g")


class DelayReservoir:
    """Stateful single-node delay reservoir.

    Consecutive calls continue the same trajectory, which is how the
    transient, buffer and training phases are chained.
    """

    def __init__(
        self,
        params: ReservoirParams,
        timing: TimingConfig,
        mask: Mask,
        model_name: str = "hopf",
        initial: complex = DEFAULT_INITIAL,
    ):
        if len(mask) != timing.virtual_nodes:
            raise ConfigurationError(
                f"mask length {len(mask)} != virtual_nodes {timing.virtual_nodes}"
            )
        self.params = params
        self.timing = timing
        self.mask = mask
        self.model: Model = get_model(model_name, params)
        self.history = HistoryBuffer(params.tau, timing.dt, initial)
        self.state = complex(initial)

    @property
    def time(self) -> float:
        return self.history.head_time

    def settle(self, duration: float = DEFAULT_TRANSIENT) -> complex:
        """Run without drive for ``duration`` time units."""
        n = grid_steps(duration, self.timing.dt, "transient")
        if n:
            self.state, _ = advance(self.model, self.state, self.history, np.zeros(1), n)
        return self.state

    def drive(self, inputs, chunk: int = 10_000) -> np.ndarray:
        """Feed ``inputs`` one clock cycle each; returns the (N, N_V) readouts."""
        inputs = np.asarray(inputs, dtype=np.float64)
        if not np.all(np.isfinite(inputs)):
            raise ValueError("inputs must be finite")
        n_v = self.timing.virtual_nodes
        out = np.empty((inputs.shape[0], n_v))
        scaled_mask = self.params.eta * self.mask.values
        for start in range(0, inputs.shape[0], chunk):
            block = inputs[start : start + chunk]
            levels = np.outer(block, scaled_mask).ravel()
            self.state, z = advance(
                self.model, self.state, self.history, levels, self.timing.steps_per_node
            )
            out[start : start + block.shape[0]] = (z.real**2 + z.imag**2).reshape(-1, n_v)
        return out


def run_reservoir(
    params: ReservoirParams,
    timing: TimingConfig,
    mask: Mask,
    inputs,
    model_name: str = "hopf",
    transient: float = DEFAULT_TRANSIENT,
    initial: complex = DEFAULT_INITIAL,
) -> StateMatrix:
    """Settle for ``transient`` time units, then drive with ``inputs``."""
    reservoir = DelayReservoir(params, timing, mask, model_name, initial)
    reservoir.settle(transient)
    return StateMatrix(reservoir.drive(inputs))
