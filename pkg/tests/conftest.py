import logging

import numpy as np
import pytest

from fermibos.effham import ModeMatrices
from fermibos.lattice import PotentialSpec, semiclassical_params
from fermibos.pipeline import bosonize

# lines recorded by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="fermibos")


@pytest.fixture(scope="session")
def unit_V():
    return PotentialSpec.unit_shell(1.0)


@pytest.fixture(scope="session")
def bz15(unit_V):
    """k_F = 15 with M = 16: three modes of dimension 2, 8 and 6."""
    return bosonize(15, unit_V, 16)


@pytest.fixture(scope="session")
def small_bz(unit_V):
    """Tiny instance for the fermionic engine (one or two pairs per patch are in the hundreds)."""
    return bosonize(6, unit_V, 8, R_V=1)


@pytest.fixture(scope="session")
def sys10():
    return semiclassical_params(10)


def synthetic_mode(d, v, g, k=(0, 0, 1)):
    """Mode matrices in antipodal block form from half-size data ``d`` and ``b = g v v^T``."""
    d = np.asarray(d, dtype=float)
    v = np.asarray(v, dtype=float)
    h = len(d)
    b = g * np.outer(v, v)
    Z = np.zeros((h, h))
    D = np.diag(np.r_[d, d])
    W = np.block([[b, Z], [Z, b]])
    Wt = np.block([[Z, b], [b, Z]])
    return ModeMatrices(tuple(k), tuple(range(2 * h)), D, W, Wt, np.sqrt(np.r_[d, d]), np.r_[v, v], g, 2 * h)
