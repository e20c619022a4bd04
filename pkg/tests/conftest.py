import pytest

from dnls_torus.field import make_grid

ACCEPTANCE_LINES = []


@pytest.fixture
def grid64():
    return make_grid(64)


@pytest.fixture
def grid128():
    return make_grid(128)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
