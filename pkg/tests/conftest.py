import numpy as np
import pytest

from vfpfront.front import solve_front
from vfpfront.kinetic import KineticModel
from vfpfront.model import ModelParams

# filled by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_front():
    return solve_front(ModelParams())


@pytest.fixture(scope="session")
def coarse_params():
    return ModelParams(nz=257)


@pytest.fixture(scope="session")
def coarse_front(coarse_params):
    return solve_front(coarse_params)


@pytest.fixture(scope="session")
def coarse_model(coarse_front):
    return KineticModel(coarse_front)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
