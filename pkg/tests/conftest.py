import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class _Criterion:
    """Collects named checks for one acceptance criterion and records the outcome."""

    def __init__(self, number):
        self.number = number
        self.failures = []
        self.details = []

    def check(self, ok, label):
        ok = bool(ok)
        (self.details if ok else self.failures).append(label)
        return ok

    def note(self, text):
        self.details.append(text)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    c = _Criterion(marker.args[0])
    yield c
    passed = not c.failures and request.node.rep_call_passed
    detail = "; ".join(c.failures if c.failures else c.details)
    _RESULTS[c.number] = (passed, detail)
    print(f"\ncriterion {c.number}: {'PASS' if passed else 'FAIL'} ({detail})")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call_passed = rep.passed
    elif rep.when == "setup":
        item.rep_call_passed = False


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        passed, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
