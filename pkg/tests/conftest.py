import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from cns_observer.spectral import FluidParams


@pytest.fixture
def params():
    """gamma = 1.4, nu = 0.05, rho0 = 1 (mu = 0.025, lam = 0)."""
    return FluidParams.from_nu(0.05)


def multiset_distance(a, b):
    """Largest gap after optimally pairing two eigenvalue multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    assert a.shape == b.shape, (a, b)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
