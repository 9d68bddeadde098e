import numpy as np
import pytest

from absorbtime import TransitionMatrix

WORKED = [
    [1.0, 0.0, 0.0, 0.0],
    [0.5, 0.0, 0.5, 0.0],
    [0.0, 0.5, 0.0, 0.5],
    [0.0, 0.0, 0.0, 1.0],
]

# lines appended by test_acceptance, printed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def worked():
    return TransitionMatrix(np.array(WORKED))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
