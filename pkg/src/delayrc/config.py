"""Experiment configuration, named presets and YAML (de)serialisation."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .models import MODEL_CODES, ReservoirParams
from .reservoir import DEFAULT_TRANSIENT, TimingConfig

# sub-seed labels; changing them changes every derived stream
SEED_LABELS = {"mask": 0, "inputs": 1, "narma_inputs": 2}


@dataclass(frozen=True)
class CapacitySettings:
    degree_cap: int = 5
    lag_cap: int = 120
    threshold: float = 0.0125
    dead_window: int = 10
    min_lag: int = 0
    max_tasks: int | None = 2_000_000
    # float, or "gram" for sqrt(N_V * eps), the cut-off implied by
    # pseudo-inverting the Gram matrix S'S at default LAPACK tolerance
    pinv_rtol: float | str = 1e-10

    def rtol_for(self, n_cols: int) -> float:
        if self.pinv_rtol == "gram":
            return math.sqrt(n_cols * np.finfo(np.float64).eps)
        return float(self.pinv_rtol)


@dataclass(frozen=True)
class NarmaSettings:
    enabled: bool = True
    test_fraction: float = 0.2
    warmup: int = 10


@dataclass(frozen=True)
class ScanSpec:
    tau: tuple[float, ...] = (80.0,)
    clock_cycle: tuple[float, ...] = (80.0,)


@dataclass(frozen=True)
class ExperimentConfig:
    reservoir: ReservoirParams = field(default_factory=ReservoirParams)
    timing: TimingConfig = field(default_factory=TimingConfig)
    model: str = "hopf"
    master_seed: int = 0
    transient: float = DEFAULT_TRANSIENT
    n_buffer: int = 2000
    n_train: int = 20000
    initial: complex = 0.1 + 0.0j
    capacity: CapacitySettings = field(default_factory=CapacitySettings)
    narma: NarmaSettings = field(default_factory=NarmaSettings)
    scan: ScanSpec = field(default_factory=ScanSpec)
    workers: int = 1
    preset: str = "desk"

    def __post_init__(self):
        if self.model not in MODEL_CODES:
            raise ConfigurationError(f"unknown model {self.model!r}")
        if self.n_train < 10 * self.timing.virtual_nodes:
            raise ConfigurationError(
                f"n_train={self.n_train} must be at least 10 x virtual_nodes"
            )
        if self.n_buffer < self.capacity.lag_cap:
            raise ConfigurationError(
                f"n_buffer={self.n_buffer} must cover lag_cap={self.capacity.lag_cap}"
            )
        if not self.scan.tau or not self.scan.clock_cycle:
            raise ConfigurationError("scan ranges must be non-empty")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def point_seeds(self, point_index: int) -> dict[str, int]:
        """Labelled sub-seeds derived from (master_seed, point_index)."""
        out = {}
        for label, code in SEED_LABELS.items():
            ss = np.random.SeedSequence(self.master_seed, spawn_key=(point_index, code))
            out[label] = int(ss.generate_state(1, np.uint64)[0])
        return out

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = {
            "preset": self.preset,
            "model": self.model,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "reservoir": asdict(self.reservoir),
            "timing": asdict(self.timing),
            "protocol": {
                "transient": self.transient,
                "n_buffer": self.n_buffer,
                "n_train": self.n_train,
                "initial_re": self.initial.real,
                "initial_im": self.initial.imag,
            },
            "capacity": asdict(self.capacity),
            "narma": asdict(self.narma),
            "scan": {"tau": list(self.scan.tau), "clock_cycle": list(self.scan.clock_cycle)},
        }
        return d


PRESETS = {
    "desk": {},
    "paper": {
        "protocol": {"n_buffer": 100_000, "n_train": 250_000},
        "capacity": {"degree_cap": 10, "lag_cap": 1000, "threshold": 0.001, "max_tasks": None},
    },
}


def _expand_axis(value) -> tuple[float, ...]:
    """A list of values, a scalar, or {start, stop, step} with inclusive stop."""
    if isinstance(value, dict):
        start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        if step <= 0:
            raise ConfigurationError("scan step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ConfigurationError(f"empty scan range {value}")
        return tuple(round(start + k * step, 10) for k in range(n))
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return (float(value),)


def _build(cls, section: dict | None, name: str):
    section = dict(section or {})
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return cls(**section)


def _merge(base: dict, update: dict) -> dict:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "scan":
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def config_from_dict(data: dict, preset: str | None = None) -> ExperimentConfig:
    """Build a config: defaults, then the preset, then ``data``."""
    data = dict(data or {})
    preset = preset or data.get("preset", "desk")
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    data = _merge(PRESETS[preset], data)
    known = {"preset", "model", "master_seed", "seed", "workers", "reservoir", "timing",
             "protocol", "capacity", "narma", "scan"}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown top-level keys: {sorted(unknown)}")

    protocol = dict(data.get("protocol") or {})
    allowed_protocol = {"transient", "n_buffer", "n_train", "initial_re", "initial_im"}
    if set(protocol) - allowed_protocol:
        raise ConfigurationError(f"unknown keys in [protocol]: {sorted(set(protocol) - allowed_protocol)}")
    scan = dict(data.get("scan") or {})
    if set(scan) - {"tau", "clock_cycle"}:
        raise ConfigurationError(f"unknown keys in [scan]: {sorted(set(scan) - {'tau', 'clock_cycle'})}")
    reservoir = _build(ReservoirParams, data.get("reservoir"), "reservoir")
    timing = _build(TimingConfig, data.get("timing"), "timing")
    kwargs = dict(
        reservoir=reservoir,
        timing=timing,
        model=data.get("model", "hopf"),
        master_seed=int(data.get("master_seed", data.get("seed", 0))),
        workers=int(data.get("workers", 1)),
        capacity=_build(CapacitySettings, data.get("capacity"), "capacity"),
        narma=_build(NarmaSettings, data.get("narma"), "narma"),
        scan=ScanSpec(
            tau=_expand_axis(scan.get("tau", reservoir.tau)),
            clock_cycle=_expand_axis(scan.get("clock_cycle", timing.clock_cycle)),
        ),
        preset=preset,
    )
    for key in ("transient",):
        if key in protocol:
            kwargs[key] = float(protocol[key])
    for key in ("n_buffer", "n_train"):
        if key in protocol:
            kwargs[key] = int(protocol[key])
    kwargs["initial"] = complex(protocol.get("initial_re", 0.1), protocol.get("initial_im", 0.0))
    return ExperimentConfig(**kwargs)


def preset_config(name: str = "desk") -> ExperimentConfig:
    return config_from_dict({}, preset=name)


def load_config(path: str | Path | None, preset: str | None = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: expected a mapping at top level")
    return config_from_dict(data, preset)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)
