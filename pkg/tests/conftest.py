import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store one pass/fail line per acceptance criterion."""

    def _record(key, passed, detail):
        ACCEPTANCE[key] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
