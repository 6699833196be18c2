"""Acceptance criteria at desk scale.

Each ``test_criterion_<n>`` maps to one numbered criterion; the terminal
summary prints one PASS/FAIL line per criterion with the measured values.
The delay scans are shared module fixtures (about three minutes in total).
"""
import math
import time

import numpy as np
import pytest

from delayrc import experiments as ex
from delayrc.capacity import enumerate_and_measure, linear_recall_profile
from delayrc.config import CapacitySettings, ExperimentConfig, ScanSpec
from delayrc.integrator import integrate_span
from delayrc.models import Model, ReservoirParams
from delayrc.readout import capacity_direct, nrmse, train_least_squares
from delayrc.tasks import narma10_sequence

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SCAN_TAUS = (8.0, 40.0, 80.0, 128.0, 160.0, 240.0)
RESONANCE_TAUS = (144.0, 160.0, 176.0)


def desk_config(taus) -> ExperimentConfig:
    """Default operating point, n_train=20000, degree_cap=5, lag_cap=120."""
    config = ExperimentConfig(scan=ScanSpec(tau=tuple(taus), clock_cycle=(80.0,)))
    assert (config.n_train, config.capacity.degree_cap, config.capacity.lag_cap) == (20_000, 5, 120)
    return config


def by_tau(results):
    return {r.tau: r for r in results}


@pytest.fixture(scope="module")
def tau_scan(tmp_path_factory):
    config = desk_config(SCAN_TAUS)
    results = ex.scan_tau(config)
    out = ex.write_scan_outputs(tmp_path_factory.mktemp("scan_a"), config, results, "scan-tau")
    return config, results, out


@pytest.fixture(scope="module")
def resonance_scan():
    return by_tau(ex.scan_tau(desk_config(RESONANCE_TAUS)))


@pytest.fixture(scope="module")
def scan(tau_scan):
    _, results, _ = tau_scan
    assert all(r.status == "ok" for r in results), [r.error for r in results]
    return by_tau(results)


# 1 -------------------------------------------------------------------------

def test_criterion_01_capacity_identity(measured):
    rng = np.random.default_rng(1)
    sizes = [(50, 3), (500, 20)] + [
        (int(rng.integers(50, 501)), int(rng.integers(3, 21))) for _ in range(98)
    ]
    start = time.perf_counter()
    worst = 0.0
    for n, m in sizes:
        n = max(n, m + 2)
        s = rng.normal(size=(n, m)) @ rng.normal(size=(m, m)) + rng.normal(size=m)
        o = s @ rng.normal(size=m) * rng.uniform(0, 2) + rng.normal(size=n) + rng.normal()
        readout = train_least_squares(s, o, with_bias=True)
        gap = abs(capacity_direct(s, o) - (1.0 - nrmse(readout.predict(s), o) ** 2))
        worst = max(worst, gap)
    elapsed = time.perf_counter() - start
    measured(1, f"max |C - (1 - NRMSE^2)| = {worst:.2e} over {len(sizes)} instances in {elapsed:.2f} s")
    assert worst <= 1e-8
    assert elapsed < 10.0


# 2 -------------------------------------------------------------------------

def test_criterion_02_rk4_convergence(measured):
    start = time.perf_counter()
    lam, omega, t_end = -0.1, 1.0, 20.0
    model = Model("hopf", ReservoirParams(lam=lam, omega=omega, gamma_r=0.0, kappa=0.0, eta=0.0, tau=0.08))
    exact = np.exp(complex(lam, omega) * t_end)
    dts = np.array([0.04, 0.02, 0.01, 0.005])
    err = np.array([abs(integrate_span(model, 1 + 0j, None, 0.0, t_end, dt).final - exact) for dt in dts])
    slope = np.polyfit(np.log(dts), np.log(err), 1)[0]
    elapsed = time.perf_counter() - start
    measured(2, f"log-log slope {slope:.3f}; errors {', '.join(f'{e:.2e}' for e in err)}")
    assert abs(slope - 4.0) <= 0.3
    assert elapsed < 10.0


# 3 -------------------------------------------------------------------------

def test_criterion_03_hopf_fixed_point(measured):
    start = time.perf_counter()
    model = Model("hopf", ReservoirParams(lam=0.1, gamma_r=-0.1, kappa=0.0, eta=0.0))
    amplitude = abs(integrate_span(model, 0.05 + 0.02j, None, 0.0, 500.0).final)
    elapsed = time.perf_counter() - start
    measured(3, f"|Z| = {amplitude:.10f} after 500 time units ({elapsed:.2f} s)")
    assert abs(amplitude - 1.0) <= 1e-6
    assert elapsed < 5.0


# 4 -------------------------------------------------------------------------

def test_criterion_04_synthetic_reservoirs(measured):
    start = time.perf_counter()
    cap = CapacitySettings()
    settings = dict(degree_cap=cap.degree_cap, lag_cap=cap.lag_cap, threshold=cap.threshold,
                    dead_window=cap.dead_window, min_lag=cap.min_lag, max_tasks=cap.max_tasks)
    n, hist = 5000, cap.lag_cap
    u = np.random.default_rng(4).uniform(-1, 1, n + hist)
    lag = lambda k: u[hist - k : hist - k + n]

    line = enumerate_and_measure(np.column_stack([lag(1), lag(2), lag(3)]), u, **settings)
    square = enumerate_and_measure(np.column_stack([lag(1), lag(1) ** 2]), u, **settings)
    elapsed = time.perf_counter() - start
    mc_line, mc_square = line.mc_by_degree, square.mc_by_degree
    measured(4, f"delay line: MC1={mc_line[1]:.4f} MC={line.total_mc:.4f}; "
                f"{{u, u^2}}: MC1={mc_square[1]:.4f} MC2={mc_square[2]:.4f} ({elapsed:.1f} s)")
    assert mc_line[1] == pytest.approx(3.0, abs=0.1)
    assert line.total_mc == pytest.approx(3.0, abs=0.1)
    assert mc_square[1] == pytest.approx(1.0, abs=0.05)
    assert mc_square[2] == pytest.approx(1.0, abs=0.05)
    assert elapsed < 30.0


# 5, 6, 7, 9, 10, 11 ---------------------------------------------------------

def test_criterion_05_mc_bound(scan, measured):
    mcs = {tau: r.table.total_mc for tau, r in scan.items()}
    measured(5, "MC: " + ", ".join(f"tau={tau:g}: {mc:.2f}" for tau, mc in mcs.items()))
    measured(5, "max clamp excursion: "
                f"{max(r.table.stats['max_clamp_excursion'] for r in scan.values()):.1e}; "
                "budget exhausted: " + str(any(r.table.stats["budget_exhausted"] for r in scan.values())))
    assert all(mc <= 50.5 for mc in mcs.values())


def test_criterion_06_plateau_and_short_delay_deficit(scan, measured):
    mc128, mc8 = scan[128.0].table.total_mc, scan[8.0].table.total_mc
    measured(6, f"MC(128) = {mc128:.2f} (>= 44), MC(8) = {mc8:.2f} (<= 30)")
    assert mc128 >= 44
    assert mc8 <= 30


def test_criterion_07a_resonance_total_dip(scan, measured):
    mc160, mc128 = scan[160.0].table.total_mc, scan[128.0].table.total_mc
    measured(7, f"MC(160) = {mc160:.2f} vs MC(128) - 2 = {mc128 - 2:.2f}")
    assert mc160 <= mc128 - 2


def test_criterion_07b_resonance_quadratic_dip(resonance_scan, measured):
    mc2 = {tau: r.table.mc_by_degree[2] for tau, r in resonance_scan.items()}
    measured(7, "MC2: " + ", ".join(f"tau={tau:g}: {v:.2f}" for tau, v in mc2.items()))
    assert mc2[160.0] < min(mc2[144.0], mc2[176.0])


def test_criterion_09_degree_four_regime(scan, measured):
    mc4_40, mc4_160 = scan[40.0].table.mc_by_degree[4], scan[160.0].table.mc_by_degree[4]
    measured(9, f"MC4(40) = {mc4_40:.3f}, MC4(160) = {mc4_160:.3f}")
    assert mc4_40 > mc4_160


def test_criterion_10_narma10(scan, measured):
    e128, e160 = scan[128.0].narma_nrmse, scan[160.0].narma_nrmse
    assert e128 is not None and e160 is not None, "NARMA10 run missing"
    u = np.random.default_rng(42).uniform(0, 0.5, 1000)
    ours = narma10_sequence(u)
    a = np.zeros(1010)
    up = np.concatenate([np.zeros(9), u])
    for j in range(1000):
        a[j + 10] = 0.3 * a[j + 9] + 0.05 * a[j + 9] * a[j : j + 10].sum() + 1.5 * up[j] * up[j + 9] + 0.1
    oracle_gap = float(np.max(np.abs(ours - a[10:])))
    measured(10, f"NRMSE(128) = {e128:.4f}, NRMSE(160) = {e160:.4f}; oracle gap {oracle_gap:.1e}")
    assert e128 < 1.0
    assert e128 < e160
    assert oracle_gap <= 1e-12


def test_criterion_11_reproducible_summary(tau_scan, tmp_path, measured):
    config, _, first = tau_scan
    again = ex.write_scan_outputs(tmp_path / "scan_b", config, ex.scan_tau(config), "scan-tau")
    same = (first / "summary.csv").read_bytes() == (again / "summary.csv").read_bytes()
    measured(11, f"summary.csv bit-identical on repeat: {same}")
    assert same
    assert (first / "capacities.csv").read_bytes() == (again / "capacities.csv").read_bytes()


# 8 -------------------------------------------------------------------------

def _profile(config, tau, index):
    states, u, _ = ex.capacity_states(config, tau, 80.0, index)
    return np.array([c for _, c in linear_recall_profile(states, u, 45)])


def test_criterion_08_linear_recall(measured):
    config = desk_config(SCAN_TAUS)
    short = _profile(config, 80.0, SCAN_TAUS.index(80.0))
    long = _profile(config, 240.0, SCAN_TAUS.index(240.0))
    lags = np.arange(1, 46)

    below = short < 0.05
    # first lag from which the profile stays below 0.05
    stays = np.array([below[i:].all() for i in range(below.size)])
    decay_lag = int(lags[np.argmax(stays)]) if stays.any() else math.inf

    gaps = [
        (int(lags[i]), int(lags[j]))
        for i in range(1, long.size - 1) if long[i] < 0.1
        for j in range(i + 1, long.size) if long[j] > 0.3
    ]
    measured(8, f"tau=80: below 0.05 from lag {decay_lag}; C1[1..20] = "
                + " ".join(f"{c:.2f}" for c in short[:20]))
    measured(8, f"tau=240: first gap/recovery {gaps[0] if gaps else None}; C1[1..20] = "
                + " ".join(f"{c:.2f}" for c in long[:20]))
    assert 10 <= decay_lag <= 20
    assert gaps, "no interior gap followed by recovery"
