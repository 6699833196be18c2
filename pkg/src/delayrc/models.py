"""Right-hand sides for the delay-coupled oscillator reservoirs.

Two models share one calling convention ``rhs(z, z_delayed, drive)`` where
``drive`` is the already-masked electrical injection ``eta * g(t) * u_n``:

* ``hopf``    -- Stuart-Landau / Hopf normal form with delayed feedback
* ``class_a`` -- Class-A laser field equation (carriers adiabatically
  eliminated) with the same delayed feedback term
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

MODEL_CODES = {"hopf": 0, "class_a": 1}


@dataclass(frozen=True)
class ReservoirParams:
    """Physical parameters of the delay reservoir; defaults are the reference operating point."""

    lam: float = -0.02  # pump rate lambda
    eta: float = 0.01  # input strength
    omega: float = 0.0
    gamma_r: float = -0.1
    gamma_i: float = 0.0
    kappa: float = 0.1  # feedback strength
    phi: float = 0.0  # feedback phase
    tau: float = 80.0  # delay time
    # Class-A only
    pump: float = -0.02
    alpha: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} must be finite, got {value}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")

    @property
    def gamma(self) -> complex:
        return complex(self.gamma_r, self.gamma_i)

    @property
    def feedback(self) -> complex:
        return self.kappa * cmath.exp(1j * self.phi)

    def replace(self, **changes) -> "ReservoirParams":
        return ReservoirParams(**{**asdict(self), **changes})


def hopf_rhs(params: ReservoirParams, z: complex, z_del: complex, drive: float) -> complex:
    """(lam + drive + i*omega + gamma*|z|^2) * z + kappa*exp(i*phi) * z_del"""
    intensity = z.real * z.real + z.imag * z.imag
    gain = params.lam + drive + 1j * params.omega + params.gamma * intensity
    return gain * z + params.feedback * z_del


def classA_rhs(
    params: ReservoirParams,
    pump: float,
    z: complex,
    z_del: complex,
    drive: float,
    alpha: float,
) -> complex:
    """(1 + i*alpha) * E * (P~ - |E|^2) / (1 + 2|E|^2) + kappa*exp(i*phi) * E_del,
    with P~ = pump + drive."""
    intensity = z.real * z.real + z.imag * z.imag
    p_eff = pump + drive
    local = (1 + 1j * alpha) * z * (p_eff - intensity) / (1 + 2 * intensity)
    return local + params.feedback * z_del


@dataclass(frozen=True)
class Model:
    """A named right-hand side bound to its parameters.

    ``rhs`` is the pure-Python evaluator; ``kernel_args`` packs the same
    coefficients for the compiled integrator.
    """

    name: str
    params: ReservoirParams = field(default_factory=ReservoirParams)

    def __post_init__(self):
        if self.name not in MODEL_CODES:
            raise ValueError(f"unknown model {self.name!r}; expected one of {sorted(MODEL_CODES)}")

    @property
    def code(self) -> int:
        return MODEL_CODES[self.name]

    def rhs(self, z: complex, z_del: complex, drive: float) -> complex:
        if self.name == "hopf":
            return hopf_rhs(self.params, z, z_del, drive)
        return classA_rhs(self.params, self.params.pump, z, z_del, drive, self.params.alpha)

    def kernel_args(self) -> tuple[int, np.ndarray]:
        p = self.params
        fb = p.feedback
        packed = np.array(
            [p.lam, p.omega, p.gamma_r, p.gamma_i, fb.real, fb.imag, p.pump, p.alpha],
            dtype=np.float64,
        )
        return self.code, packed


def get_model(name: str, params: ReservoirParams | None = None) -> Model:
    return Model(name, params if params is not None else ReservoirParams())


@numba.njit(cache=True)
def kernel_rhs(code, p, z, z_del, drive):
    # p = [lam, omega, gamma_r, gamma_i, fb_re, fb_im, pump, alpha]
    intensity = z.real * z.real + z.imag * z.imag
    fb = complex(p[4], p[5])
    if code == 0:
        gain = complex(p[0] + drive + p[2] * intensity, p[1] + p[3] * intensity)
        return gain * z + fb * z_del
    p_eff = p[6] + drive
    local = complex(1.0, p[7]) * z * ((p_eff - intensity) / (1.0 + 2.0 * intensity))
    return local + fb * z_del
