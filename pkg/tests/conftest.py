import math

import numpy as np
import pytest

from gsqgvw.checks import random_band_limited
from gsqgvw.spectral import GridSpec

ACCEPTANCE_LINES = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    """Store one acceptance line; printed in the terminal summary."""
    ACCEPTANCE_LINES.append((number, f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"))
    print(ACCEPTANCE_LINES[-1][1])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid64():
    return GridSpec(2 * math.pi, 64)


@pytest.fixture
def band_limited(grid64, rng):
    def make(kmax=20, zero_mean=False, grid=None):
        return random_band_limited(grid or grid64, rng, kmax, zero_mean)
    return make
