"""Shared fixtures and the acceptance summary printed at the end of a run."""
from __future__ import annotations

from collections import OrderedDict

import pytest

CRITERIA = OrderedDict([
    (1, "min-max envelope of the gaps"),
    (2, "conservation and monotone functionals"),
    (3, "two-particle closed form"),
    (4, "shock law sqrt(2t) for data crossing 1"),
    (5, "equilibrium intervals and plateau collision"),
    (6, "waiting time under F2"),
    (7, "porous-medium closed-form profile"),
    (8, "micro-macro L1 consistency"),
    (9, "total variation of the gaps"),
    (10, "byte-identical preset runs"),
])

_outcomes: dict[int, list[bool]] = {}
_details: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def report(request):
    """Record a measured value for the acceptance summary."""
    marker = request.node.get_closest_marker("criterion")

    def _report(text: str):
        if marker is not None:
            _details.setdefault(marker.args[0], []).append(text)

    return _report


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key in report.keywords:
        if key.startswith("criterion_"):
            n = int(key.split("_", 1)[1])
            _outcomes.setdefault(n, []).append(report.passed)


def pytest_collection_modifyitems(items):
    # expose the criterion number as a keyword visible in the log report
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.keywords[f"criterion_{marker.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n not in _outcomes:
            continue
        status = "PASS" if all(_outcomes[n]) else "FAIL"
        line = f"criterion {n:2d} {status}  {title}"
        if n in _details:
            line += "  [" + "; ".join(_details[n]) + "]"
        tr.write_line(line)
