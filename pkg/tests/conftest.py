import numpy as np
import pytest

from mpga.instances import make_l1l2_instance, make_l1sk_instance


@pytest.fixture(scope="session")
def small_l1sk():
    return make_l1sk_instance(64, 540, 10, 2.0, 200.0, seed=3)


@pytest.fixture(scope="session")
def small_l1l2():
    return make_l1l2_instance(64, 540, 6, 1.0, 2e-4, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
