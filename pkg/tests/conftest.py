import numpy as np
import pytest

from heatflow.dataspace import Dataset, TimeGrid
from heatflow.datasets import TOY_POINTS
from heatflow.potential import Kernel
from heatflow.stability import run_flow

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy():
    return Dataset(np.array(TOY_POINTS))


@pytest.fixture(scope="session")
def toy_flow(toy):
    return run_flow(toy, Kernel(), TimeGrid.uniform(0.01, 0.4, 51))
