import pytest
from hypothesis import settings

from sqfree.modforms import delta_record, eigenbasis, level1_basis

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def delta_small():
    return delta_record(2000)


@pytest.fixture(scope="session")
def s24_small():
    return eigenbasis(level1_basis(24, 1201))


# one PASS/FAIL line per acceptance criterion -------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    failed = report.failed
    prev = _CRITERIA.get(crit[0])
    _CRITERIA[crit[0]] = (crit[1], failed or (prev is not None and prev[1]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, failed = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'FAIL' if failed else 'PASS'}  {title}")
