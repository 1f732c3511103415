import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed and not detail:
        detail = f"error during {rep.when}"
    _RESULTS[marker.args[0]] = (rep.passed and rep.when == "call", detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
