"""NARMA10 target generation."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NarmaDivergence

ORDER = 10
DIVERGENCE_LIMIT = 10.0


@dataclass
class Narma10State:
    """Last ten values of A and of u, newest last; zero-initialised."""

    a_history: deque = field(default_factory=lambda: deque([0.0] * ORDER, maxlen=ORDER))
    u_history: deque = field(default_factory=lambda: deque([0.0] * ORDER, maxlen=ORDER))
    index: int = 0


def narma10_step(state: Narma10State, u_n: float) -> float:
    """A_{n+1} = 0.3 A_n + 0.05 A_n sum_{i=0}^{9} A_{n-i} + 1.5 u_{n-9} u_n + 0.1

    ``state`` holds A_{n-9..n} and u_{n-10..n-1} before the call and is
    shifted in place.
    """
    a = state.a_history
    state.u_history.append(float(u_n))
    a_n = a[-1]
    u_lag9 = state.u_history[0]
    a_next = 0.3 * a_n + 0.05 * a_n * sum(a) + 1.5 * u_lag9 * u_n + 0.1
    if not abs(a_next) <= DIVERGENCE_LIMIT:
        raise NarmaDivergence(state.index, a_next)
    a.append(a_next)
    state.index += 1
    return a_next


def narma10_sequence(inputs) -> np.ndarray:
    """Element n is A_{n+1}, the value predicted from the state after input u_n."""
    state = Narma10State()
    return np.array([narma10_step(state, u) for u in np.asarray(inputs, dtype=np.float64)])
