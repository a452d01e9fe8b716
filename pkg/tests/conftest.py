import numpy as np
import pytest

from simorbit.chain import GeneratorMatrix, StochasticKernel, stationary_distribution

PHAT = np.array([
    [0.5, 0.35, 0.05, 0.1],
    [0.3, 0.5, 0.1, 0.1],
    [0.2, 0.1, 0.5, 0.2],
    [0.2, 0.05, 0.25, 0.5],
])
P_PRINTED = np.array([
    [0.5, 0.2629, 0.1157, 0.1213],
    [0.3994, 0.5, 0.0660, 0.0346],
    [0.0864, 0.1515, 0.5, 0.2621],
    [0.1648, 0.1444, 0.1907, 0.5],
])
G5 = np.array([
    [-1, 1, 0, 0, 0],
    [0.5, -1, 0.5, 0, 0],
    [0, 0.5, -1, 0.5, 0],
    [0, 0, 0.5, -1, 0.5],
    [0, 0, 0, 1, -1],
], dtype=float)
L5_PRINTED = np.array([
    [-1.5, 1, 0.5, 0, 0],
    [0.5, -1, 0.5, 0, 0],
    [0, 0.5, -1, 0.5, 0],
    [0, 0, 0.5, -1, 0.5],
    [0, 0, 0, 0.5, -0.5],
], dtype=float)
PI_L5 = np.array([0.0625, 0.1875, 0.25, 0.25, 0.25])

_CRITERIA: dict[int, str] = {}


def record_criterion(k: int, ok: bool, detail: str) -> None:
    _CRITERIA[k] = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])


@pytest.fixture
def phat():
    return StochasticKernel(PHAT, stationary_distribution(PHAT))


@pytest.fixture
def gmc4(phat):
    from simorbit.chain import time_reversal

    return time_reversal(phat)


@pytest.fixture
def g5():
    return GeneratorMatrix(G5).with_stationary()


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
