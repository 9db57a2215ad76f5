import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records an acceptance outcome for the summary."""

    def record(number, ok, detail):
        _CRITERIA.append((number, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
