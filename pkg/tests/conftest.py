import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance line: verdict(criterion, ok, detail)."""

    def record(criterion, ok, detail):
        VERDICTS.append((criterion, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in VERDICTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
