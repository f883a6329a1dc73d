import numpy as np
import pytest

from relswap.quantum import DensityMatrix, PureState

ACCEPTANCE_LINES = []


def random_pure(rng, labels=("A", "B", "C", "D")):
    v = rng.normal(size=2 ** len(labels)) + 1j * rng.normal(size=2 ** len(labels))
    return PureState(v / np.linalg.norm(v), labels)


def random_density(rng, labels=("A", "B"), rank=None):
    dim = 2 ** len(labels)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho)
    return DensityMatrix(0.5 * (rho + rho.conj().T), labels)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
