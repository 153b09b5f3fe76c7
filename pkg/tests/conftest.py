import pytest

from gazetrace import kernels

_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the build")


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        marker = getattr(report, "_acceptance", None)
        if marker is not None:
            _acceptance.append((marker[0], marker[1], report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep._acceptance = m.args


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    # a parametrized criterion passes only if every case passed
    merged = {}
    for number, title, outcome in _acceptance:
        ok = merged.get((number, title), True)
        merged[(number, title)] = ok and outcome == "passed"
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(merged.items()):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}")


@pytest.fixture(params=kernels.BACKENDS)
def backend(request):
    return request.param

