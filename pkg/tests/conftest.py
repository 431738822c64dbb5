import pytest

from clickstat.config import SimConfig
from clickstat.reproduce import Context
from clickstat.simulator import simulate

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_config():
    return SimConfig()


@pytest.fixture(scope="session")
def default_run(default_config):
    return simulate(default_config)


@pytest.fixture(scope="session")
def acceptance_ctx(default_config):
    return Context(default_config.rng_seed)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
