import pytest

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
VERDICTS: dict[int, tuple[bool, str]] = {}


def _merge(num: int, ok: bool, detail: str):
    prev_ok, prev = VERDICTS.get(num, (True, ""))
    VERDICTS[num] = (prev_ok and ok, "; ".join(x for x in (prev, detail) if x))


@pytest.fixture
def verdict():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(num: int, ok: bool, detail: str = ""):
        _merge(num, bool(ok), detail)
        assert ok, f"criterion {num}: {detail}"

    return record


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    if rep.failed and call.excinfo is not None and not call.excinfo.errisinstance(AssertionError):
        _merge(mark.args[0], False, f"{item.name} raised {call.excinfo.typename}")
    elif rep.failed and mark.args[0] not in VERDICTS:
        _merge(mark.args[0], False, f"{item.name} failed")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(VERDICTS):
        ok, detail = VERDICTS[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
