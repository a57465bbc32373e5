import pytest

_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record the outcome of an acceptance criterion before asserting on it."""
    def _report(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
