import numpy as np
import pytest

from scvxstar.examples.crawling import example1_problem
from scvxstar.examples.quadrotor import QuadRotorParams, example2_problem, initial_guess


@pytest.fixture(scope="session")
def ex1():
    return example1_problem()


@pytest.fixture(scope="session")
def quad_params():
    return QuadRotorParams()


@pytest.fixture(scope="session")
def ex2(quad_params):
    return example2_problem(quad_params)


@pytest.fixture(scope="session")
def ex2_init(quad_params):
    return initial_guess(quad_params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria append (name, ok, detail) here; printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: int(t[0][1:])):
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")
