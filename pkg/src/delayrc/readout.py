"""Linear readout: pseudoinverse least squares, NRMSE and direct capacity."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedStatisticError

log = logging.getLogger(__name__)

PINV_RTOL = 1e-10
CLAMP_LOG_EXCESS = 1e-6


def _as_matrix(states) -> np.ndarray:
    values = getattr(states, "values", states)
    return np.asarray(values, dtype=np.float64)


@dataclass(frozen=True)
class ReadoutWeights:
    weights: np.ndarray
    bias: float | None = None

    def predict(self, states) -> np.ndarray:
        out = _as_matrix(states) @ self.weights
        return out + self.bias if self.bias is not None else out


@dataclass(frozen=True)
class RegressionReport:
    nrmse: float
    capacity: float
    effective_rank: int


def _range_basis(matrix: np.ndarray, rtol: float = PINV_RTOL) -> tuple[np.ndarray, int]:
    """Orthonormal basis of the column space, dropping singular values below
    ``rtol * s_max``."""
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0], 0
    rank = int(np.count_nonzero(s > rtol * s[0]))
    return u[:, :rank], rank


def train_least_squares(states, targets, with_bias: bool = False) -> ReadoutWeights:
    """Minimum-norm solution of ``min ||S w - o||^2`` via the pseudoinverse."""
    s = _as_matrix(states)
    o = np.asarray(targets, dtype=np.float64)
    if s.shape[0] != o.shape[0]:
        raise ValueError(f"{s.shape[0]} state rows but {o.shape[0]} targets")
    if with_bias:
        s = np.hstack([s, np.ones((s.shape[0], 1))])
    if not np.any(s):
        log.warning("all-zero state matrix; returning zero weights")
        w = np.zeros(s.shape[1])
    else:
        w = np.linalg.pinv(s, rcond=PINV_RTOL) @ o
    if with_bias:
        return ReadoutWeights(w[:-1], float(w[-1]))
    return ReadoutWeights(w)


def nrmse(predictions, targets) -> float:
    """sqrt(sum((o - o_hat)^2) / (N * var(o))), population variance."""
    p = np.asarray(predictions, dtype=np.float64)
    o = np.asarray(targets, dtype=np.float64)
    if p.shape != o.shape:
        raise ValueError("predictions and targets differ in shape")
    if o.shape[0] < 2:
        raise ValueError("need at least two samples")
    var = o.var()
    if var <= 0:
        raise UndefinedStatisticError("target variance is zero")
    return float(np.sqrt(np.sum((o - p) ** 2) / (o.shape[0] * var)))


class CapacityProjector:
    """Factorised, column-centred state matrix shared across many targets.

    ``capacity(o)`` is o'S(S'S)^+S'o / ||o||^2 with both S and o
    mean-centred, computed as the squared norm of the projection of o onto
    an orthonormal basis of the centred column space.
    """

    def __init__(self, states, rtol: float = PINV_RTOL):
        s = _as_matrix(states)
        self.n_rows, self.n_cols = s.shape
        self.basis, self.rank = _range_basis(s - s.mean(axis=0), rtol)
        self.max_excursion = 0.0

    def raw_capacities(self, targets: np.ndarray) -> np.ndarray:
        """Unclamped capacities for the columns of ``targets`` (N, k)."""
        o = np.asarray(targets, dtype=np.float64)
        if o.ndim == 1:
            o = o[:, None]
        if o.shape[0] != self.n_rows:
            raise ValueError(f"{o.shape[0]} target rows but {self.n_rows} state rows")
        # basis columns are orthogonal to the constant vector, so only the
        # denominator needs explicit centring
        proj = self.basis.T @ o
        num = np.einsum("ij,ij->j", proj, proj)
        den = np.einsum("ij,ij->j", o, o) - o.sum(axis=0) ** 2 / self.n_rows
        if np.any(den <= 0):
            raise UndefinedStatisticError("target has zero variance")
        return num / den

    def capacities(self, targets: np.ndarray) -> np.ndarray:
        raw = self.raw_capacities(targets)
        low = float(-raw.min()) if raw.size else 0.0
        high = float(raw.max() - 1.0) if raw.size else 0.0
        excess = max(low, high, 0.0)
        if excess > self.max_excursion:
            self.max_excursion = excess
        if excess > CLAMP_LOG_EXCESS:
            log.info("capacity clamped (excess %.3g)", excess)
        return np.clip(raw, 0.0, 1.0)

    def capacity(self, target) -> float:
        return float(self.capacities(np.asarray(target, dtype=np.float64)[:, None])[0])


def capacity_direct(states, targets) -> float:
    """Fraction of the (centred) target variance captured by the best linear
    readout of the (centred) states, clamped to [0, 1]."""
    o = np.asarray(targets, dtype=np.float64)
    centred = o - o.mean()
    if not np.any(centred):
        raise UndefinedStatisticError("target has zero norm after centring")
    return CapacityProjector(states).capacity(o)


def regression_report(states, targets) -> RegressionReport:
    """In-sample fit with a bias column: NRMSE, 1 - NRMSE^2 and rank."""
    s = _as_matrix(states)
    o = np.asarray(targets, dtype=np.float64)
    readout = train_least_squares(s, o, with_bias=True)
    err = nrmse(readout.predict(s), o)
    _, rank = _range_basis(s - s.mean(axis=0))
    return RegressionReport(err, 1.0 - err**2, rank)
