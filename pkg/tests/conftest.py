import numpy as np
import pytest
from hypothesis import settings

from lics.scenarios import preset

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def fig2():
    return preset("fig2")


@pytest.fixture
def fig4():
    return preset("fig4")


@pytest.fixture
def fig5():
    return preset("fig5")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_criteria: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("acceptance") is None or item.obj.__doc__ is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.append((item.obj.__doc__.strip().splitlines()[0], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for text, outcome in _criteria:
        mark = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"{mark}  criterion {text}")
