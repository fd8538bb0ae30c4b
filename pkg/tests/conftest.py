import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the session summary, then assert."""

    def record(name, passed, detail):
        _LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
    n_pass = sum(line.startswith("PASS") for line in _LINES)
    terminalreporter.write_line(f"{n_pass}/{len(_LINES)} criteria passed")
