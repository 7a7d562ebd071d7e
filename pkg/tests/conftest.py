import pytest

# one summary line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def report():
    def _report(n: int, ok: bool, detail: str):
        ACCEPTANCE[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE[n])
        return ok
    return _report


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n = mark.args[0]
    prev = ACCEPTANCE.get(n)
    if rep.failed and (prev is None or "PASS" in prev):
        # raised before (or after) reporting: record the error itself
        msg = str(call.excinfo.value).splitlines()[0][:160] if call.excinfo else ""
        ACCEPTANCE[n] = f"criterion {n:2d}: FAIL  ({type(call.excinfo.value).__name__}: {msg})"
    elif prev is None:
        ACCEPTANCE[n] = f"criterion {n:2d}: PASS"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
