import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if rep.passed else "FAIL"
    if rep.when == "call" or number not in _acceptance:
        _acceptance[number] = f"{status} criterion {number}: {title}" + (f" [{detail}]" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_acceptance):
            terminalreporter.write_line(_acceptance[number])
