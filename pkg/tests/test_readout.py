import logging
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayrc.errors import UndefinedStatisticError
from delayrc.readout import (
    CapacityProjector,
    capacity_direct,
    nrmse,
    regression_report,
    train_least_squares,
)


def test_identity_states_interpolate():
    o = np.array([0.3, -1.2, 4.0, 0.0])
    w = train_least_squares(np.eye(4), o)
    assert np.allclose(w.weights, o)
    assert w.bias is None


def test_target_in_column_space(rng):
    s = rng.normal(size=(60, 4))
    o = 3.0 * s[:, 1]
    w = train_least_squares(s, o)
    assert np.allclose(w.weights, [0, 3, 0, 0], atol=1e-10)
    assert nrmse(w.predict(s), o) == pytest.approx(0.0, abs=1e-10)


def test_residual_orthogonal_to_columns(rng):
    s, o = rng.normal(size=(100, 5)), rng.normal(size=100)
    w = train_least_squares(s, o)
    assert np.linalg.norm(s.T @ (s @ w.weights - o)) <= 1e-8 * np.linalg.norm(s.T @ o)


def test_bias_column(rng):
    s = rng.normal(size=(80, 3))
    o = s @ np.array([1.0, -2.0, 0.5]) + 7.0
    w = train_least_squares(s, o, with_bias=True)
    assert w.bias == pytest.approx(7.0)
    assert np.allclose(w.predict(s), o)


def test_zero_states_give_zero_weights(caplog):
    with caplog.at_level(logging.WARNING):
        w = train_least_squares(np.zeros((20, 3)), np.arange(20.0))
    assert np.array_equal(w.weights, np.zeros(3))
    assert "all-zero" in caplog.text


def test_row_mismatch():
    with pytest.raises(ValueError):
        train_least_squares(np.ones((5, 2)), np.ones(4))


def test_nrmse_examples():
    o = np.array([0.2, 1.5, -0.7, 3.3])
    assert nrmse(o, o) == 0.0
    assert nrmse(np.full(4, o.mean()), o) == pytest.approx(1.0)
    assert nrmse([0.0, 0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(2.0))


def test_nrmse_errors():
    with pytest.raises(UndefinedStatisticError):
        nrmse([1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        nrmse([1.0], [1.0])
    with pytest.raises(ValueError):
        nrmse([1.0, 2.0], [1.0, 2.0, 3.0])


def test_capacity_column_and_orthogonal(rng):
    s = rng.normal(size=(200, 6))
    sc = s - s.mean(axis=0)
    assert capacity_direct(s, sc[:, 3]) == pytest.approx(1.0, abs=1e-9)
    o = rng.normal(size=200)
    o -= o.mean()
    o -= sc @ np.linalg.lstsq(sc, o, rcond=None)[0]
    assert capacity_direct(s, o) == pytest.approx(0.0, abs=1e-9)


def test_capacity_zero_target():
    with pytest.raises(UndefinedStatisticError):
        capacity_direct(np.ones((20, 2)), np.full(20, 3.0))


def _identity_gap(rng, n, m):
    s = rng.normal(size=(n, m)) * rng.uniform(0.1, 10, m) + rng.normal(size=m)
    o = s @ rng.normal(size=m) * rng.uniform(0, 1) + rng.normal(size=n) + rng.normal()
    report = regression_report(s, o)
    return abs(capacity_direct(s, o) - (1.0 - report.nrmse**2))


def test_capacity_matches_one_minus_nrmse_squared(rng):
    assert _identity_gap(rng, 200, 8) <= 1e-8


def test_capacity_identity_many_instances():
    rng = np.random.default_rng(2718)
    start = time.perf_counter()
    gaps = []
    for _ in range(100):
        m = int(rng.integers(3, 21))
        n = int(rng.integers(max(50, 10 * m), 501))
        gaps.append(_identity_gap(rng, n, m))
    assert max(gaps) <= 1e-8
    assert time.perf_counter() - start < 10.0


@settings(max_examples=50)
@given(scale=st.floats(1e-6, 1e6) | st.floats(-1e6, -1e-6), seed=st.integers(0, 10_000))
def test_capacity_scale_invariance(scale, seed):
    rng = np.random.default_rng(seed)
    s, o = rng.normal(size=(120, 5)), rng.normal(size=120)
    assert capacity_direct(s, scale * o) == pytest.approx(capacity_direct(s, o), abs=1e-10)


@settings(max_examples=50)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 8))
def test_capacity_monotone_under_column_addition(seed, m):
    rng = np.random.default_rng(seed)
    s, o = rng.normal(size=(150, m + 1)), rng.normal(size=150) + rng.normal() * 3
    s[:, -1] += 0.5 * o
    assert capacity_direct(s, o) >= capacity_direct(s[:, :m], o) - 1e-9


@settings(max_examples=50)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 12), collinear=st.booleans())
def test_capacity_bounds_and_excursion(seed, m, collinear):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(10 * m + 20, m))
    if collinear and m > 1:
        s[:, -1] = s[:, 0] * 2.0
    o = np.column_stack([rng.normal(size=s.shape[0]), s[:, 0], s[:, 0] ** 2])
    proj = CapacityProjector(s)
    raw = proj.raw_capacities(o)
    assert np.all(raw >= -1e-6) and np.all(raw <= 1 + 1e-6)
    caps = proj.capacities(o)
    assert np.all((caps >= 0) & (caps <= 1))
    assert proj.max_excursion <= 1e-6


def test_projector_rank_detects_collinear_columns(rng):
    s = rng.normal(size=(100, 4))
    s[:, 3] = s[:, 0] - s[:, 1]
    assert CapacityProjector(s).rank == 3
    assert regression_report(s, rng.normal(size=100)).effective_rank == 3


def test_projector_batch_matches_single(rng):
    s, o = rng.normal(size=(90, 4)), rng.normal(size=(90, 3))
    proj = CapacityProjector(s)
    batch = proj.capacities(o)
    assert np.allclose(batch, [capacity_direct(s, o[:, j]) for j in range(3)], atol=1e-12)
