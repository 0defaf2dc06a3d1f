import numpy as np
import pytest

from azosgd import make_overparam_lsq


@pytest.fixture
def small_lsq():
    return make_overparam_lsq(8, 4, seed=3)


@pytest.fixture
def tiny_lsq():
    return make_overparam_lsq(4, 2, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import summary_lines

    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
