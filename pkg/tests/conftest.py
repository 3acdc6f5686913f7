import pytest

from asc.contracts import BUYER, SELLER, SELLER_II


@pytest.fixture
def buyer():
    return BUYER


@pytest.fixture
def seller():
    return SELLER


@pytest.fixture
def seller2():
    return SELLER_II


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
