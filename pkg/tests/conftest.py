import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stablesets.schedule import build_schedule  # noqa: E402

TOY = dict(q=3, K=1, eps_rule=(2 / 3,), D_rule=(2,), growth_factor=2)


@pytest.fixture(scope="session")
def toy():
    """q = 3, one epoch, terminal below 1e6; cells with alpha = -1, -1/3, 1/3, 1, 5/3."""
    return build_schedule(**TOY)


@pytest.fixture(scope="session")
def toy_neg():
    return build_schedule(mode="neg_chi", **TOY)


@pytest.fixture(scope="session")
def toy5():
    return build_schedule(q=5, K=1, eps_rule=(2 / 3,), D_rule=(3,), growth_factor=2)


@pytest.fixture(scope="session")
def desk():
    return build_schedule()


@pytest.fixture(scope="session")
def desk_neg():
    return build_schedule(mode="neg_chi")


@pytest.fixture(scope="session")
def desk5():
    return build_schedule(q=5)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
