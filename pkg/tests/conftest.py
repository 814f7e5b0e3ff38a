from __future__ import annotations

import numpy as np
import pytest

from ccmar.data import MarDataset

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_record():
    """Collect one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(label: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def make_dataset(rng, n=60, m=1, theta=(1.5,), rho=lambda v: np.sin(2 * np.pi * v), sigma=1.0, p_obs=0.8):
    """Small MAR dataset with normal errors, used by several modules."""
    u = rng.normal(size=(n, m))
    v = rng.random(n)
    y = u @ np.asarray(theta, dtype=float) + rho(v) + sigma * rng.normal(size=n)
    delta = (rng.random(n) < p_obs).astype(np.int8)
    delta[:3] = 1
    return MarDataset(u, v, np.where(delta == 1, y, np.nan), delta)


@pytest.fixture
def small_dataset(rng):
    return make_dataset(rng)
