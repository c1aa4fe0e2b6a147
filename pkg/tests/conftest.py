import logging

import pytest

from simplexqmc.kernel import SimplexKernel, WeightSchedule, compute_constants

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = _CRITERIA.get(number, (title, "PASS"))[1]
        status = "PASS" if rep.outcome == "passed" and prev == "PASS" else "FAIL"
        _CRITERIA[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title}")


@pytest.fixture(autouse=True)
def _quiet_truncation_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="simplexqmc.kernel")


@pytest.fixture(scope="session")
def kernel24():
    return SimplexKernel(2, 4)


@pytest.fixture(scope="session")
def consts24(kernel24):
    return compute_constants(kernel24, 0.5)


@pytest.fixture(scope="session")
def kernel13():
    return SimplexKernel(1, 3)


@pytest.fixture(scope="session")
def sched2():
    return WeightSchedule.constant(0.5, 2)
