import pytest

from helpers import ACCEPTANCE_LINES, small_data


@pytest.fixture(scope="session")
def data():
    return small_data()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
