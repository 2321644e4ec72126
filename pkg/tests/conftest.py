import pytest

from logqsm import LogisticParams, solve
from logqsm.discretization import TEST_CELLS


@pytest.fixture(scope="session")
def params():
    return LogisticParams(1.0, 5.0)


@pytest.fixture(scope="session")
def small(params):
    return solve(params, TEST_CELLS)


@pytest.fixture(scope="session")
def full(params):
    return solve(params, 2000)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
