import warnings

import pytest
from scipy.integrate import IntegrationWarning

_criteria = {}


def pytest_configure(config):
    warnings.simplefilter("ignore", IntegrationWarning)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and rep.when == "call":
        _criteria[marker.args[0]] = (marker.args[1], "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {title}")
