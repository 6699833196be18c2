import re

import numpy as np
import pytest

from delayrc.config import CapacitySettings, ExperimentConfig, ScanSpec, TimingConfig

CRITERION_RE = re.compile(r"test_criterion_(\d+)([a-z]?)_")

_outcomes: dict[int, list[tuple[str, str]]] = {}
_measured: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    match = CRITERION_RE.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number = int(match.group(1))
        _outcomes.setdefault(number, []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        parts = _outcomes[number]
        ok = all(outcome == "passed" for _, outcome in parts)
        detail = ", ".join(f"{name}={outcome}" for name, outcome in parts)
        terminalreporter.write_line(f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  ({detail})")
        for note in _measured.get(number, []):
            terminalreporter.write_line(f"    {note}")


@pytest.fixture
def measured():
    """``measured(n, text)`` attaches a measured value to criterion ``n``'s summary line."""

    def note(number: int, text: str) -> None:
        _measured.setdefault(number, []).append(text)

    return note


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    """A tiny but complete experiment: 10 nodes, T=8, short protocol."""
    return ExperimentConfig(
        timing=TimingConfig(clock_cycle=8.0, virtual_nodes=10, dt=0.01),
        transient=200.0,
        n_buffer=30,
        n_train=2000,
        capacity=CapacitySettings(degree_cap=3, lag_cap=20, threshold=0.05),
        scan=ScanSpec(tau=(12.8,), clock_cycle=(8.0,)),
    )
