import pytest

_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    key = (str(mark.args[0]), mark.args[1])
    # a criterion spread over several tests passes only if all of them pass
    _verdicts[key] = _verdicts.get(key, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for (cid, text), ok in sorted(_verdicts.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{cid}] {text}")
