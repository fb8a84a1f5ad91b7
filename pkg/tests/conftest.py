import math

import numpy as np
import pytest

from quasispec import PiecewiseCoefficient, make_problem, preset, validate

ACCEPTANCE_LINES = []


def random_problem(rng, interval=(0.0, math.pi), schroedinger=False):
    """Problem with 1-3 interior breakpoints and low-degree random pieces.

    ``p`` and ``r`` are kept in ``[0.5, 2.5]``; ``s`` jumps at the breakpoints.
    """
    a, b = interval
    inner = np.sort(rng.uniform(a + 0.15 * (b - a), b - 0.15 * (b - a), rng.integers(1, 4)))
    bp = np.concatenate([[a], inner, [b]])
    n = len(bp) - 1

    def positive():
        # linear piece with values in [0.5, 2.5] at both ends of each subinterval
        pieces = []
        for lo, hi in zip(bp[:-1], bp[1:]):
            v0, v1 = rng.uniform(0.5, 2.5, 2)
            slope = (v1 - v0) / (hi - lo)
            pieces.append([v0 - slope * lo, slope])
        return PiecewiseCoefficient.from_power(bp, pieces)

    def general(deg, size):
        return PiecewiseCoefficient.from_power(bp, [list(rng.uniform(-size, size, deg + 1) / (1 + abs(b)) ** np.arange(deg + 1)) for _ in range(n)])

    if schroedinger:
        c = make_problem(interval, p=1.0, q=general(2, 2.0), r=1.0, s=general(1, 1.5))
    else:
        c = make_problem(interval, p=positive(), q=general(2, 2.0), r=positive(), s=general(1, 1.5))
    assert validate(c).ok
    return c


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def free():
    return preset("free")


@pytest.fixture(scope="session")
def step_s():
    return preset("step_s")


def record_acceptance(number, passed, detail):
    line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
