import pytest

from flipperplan.inflation import inflate
from flipperplan.robot import RobotParams
from flipperplan.terrain import flat_map


@pytest.fixture(scope="session")
def params():
    return RobotParams()


@pytest.fixture(scope="session")
def flat_ground():
    return flat_map()


@pytest.fixture(scope="session")
def flat_D(flat_ground, params):
    return inflate(flat_ground, params.wheel_radius)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
