import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "acceptance" not in report.keywords:
        return
    number, title = report.user_properties and dict(report.user_properties).get("acceptance") or (None, None)
    if number is not None:
        _acceptance[number] = (title, "PASS" if report.passed else "FAIL")


@pytest.fixture(autouse=True)
def _record_acceptance(request):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        request.node.user_properties.append(("acceptance", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, verdict = _acceptance[number]
        terminalreporter.write_line(f"[{verdict}] {number:2d}. {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
