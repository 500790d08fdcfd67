import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
