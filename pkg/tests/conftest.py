import numpy as np
import pytest

from mdct.grid import DomainBox, build_grid

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid_1d():
    return build_grid(DomainBox((0.0,), (10.0,)), 3, (5,))


@pytest.fixture
def grid_2d():
    return build_grid(DomainBox((0.0, 0.0), (1.0, 1.0)), 2, (4, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
