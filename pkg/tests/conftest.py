import pathlib

import numpy as np
import pytest

from backupsched.schedule import JobWindow, PeriodConfig, Schedule, load_schedule

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def table1():
    return load_schedule(DATA / "table1.json")


@pytest.fixture
def weekly():
    return load_schedule(DATA / "weekly_clusters.json")


def random_schedule(rng, n, period=168.0, max_width=12.0, lattice=None):
    windows = []
    for i in range(n):
        c = rng.uniform(0, period)
        w = rng.uniform(0.25, max_width)
        if lattice:
            c = (round(c / lattice) * lattice) % period
            w = max(lattice, round(w / lattice) * lattice)
        windows.append(JobWindow(f"c{i % 7}", float(c), float(w)))
    return Schedule(PeriodConfig(period), tuple(windows))


# -- acceptance reporting --------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion id and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label = mark.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _CRITERIA.get(label, "PASS")
        _CRITERIA[label] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(f"{_CRITERIA[label]}  {label}")
