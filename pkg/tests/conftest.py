import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance clause; the lines are echoed in the terminal summary."""

    def record(criterion, clause, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} [{criterion}] {clause}" + (f": {detail}" if detail else "")
        _LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
