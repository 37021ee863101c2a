import pytest

_VERDICTS = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    detail = getattr(item, "criterion_detail", "")
    _VERDICTS.append((marker.args[0], "PASS" if report.passed else "FAIL", detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def record(request):
    """Attach a one-line measurement summary to the acceptance verdict."""

    def _record(text):
        request.node.criterion_detail = text

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(_VERDICTS):
        terminalreporter.write_line(f"criterion {number}: {verdict}  {detail}")
