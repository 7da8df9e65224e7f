import pytest

from dgframes.frame import Frame


@pytest.fixture(scope="session")
def g30():
    return Frame(3, 0)


@pytest.fixture(scope="session")
def g50():
    return Frame(5, 0)


@pytest.fixture(scope="session")
def g51():
    return Frame(5, 1)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
