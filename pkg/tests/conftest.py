import pytest

from bolax.potential import parse_potential, preset


@pytest.fixture(scope="session")
def cosine():
    return preset("cosine")


@pytest.fixture(scope="session")
def level0():
    return preset("fig-level0")


@pytest.fixture(scope="session")
def even_two_mode():
    return parse_potential([1.0, 0.15])


_LINES = []


def record_line(line: str):
    _LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    return record_line
