import pytest

from mecrelay.model import RelayNode, SystemConfig, TaskSpec

# filled by test_acceptance; one line per criterion
ACCEPTANCE_LINES = []


@pytest.fixture
def task():
    return TaskSpec(50e6, 10.0, 0.5)


@pytest.fixture
def default_cfg(task):
    """Published defaults with four relays at unit distance."""
    relays = [RelayNode(f) for f in (25e9, 20e9, 15e9, 30e9)]
    return SystemConfig.from_db(25.0, 20.0, relays, task)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
