import os
import sys
from collections import OrderedDict

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> list of (test name, passed, detail)
_CRITERIA = OrderedDict()
_DETAILS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test checks")


@pytest.fixture
def record(request):
    """Attach a one-line detail to the current acceptance test."""

    def _record(text):
        _DETAILS.setdefault(request.node.nodeid, []).append(str(text))
        print(text)

    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        n = int(mark.args[0])
        _CRITERIA.setdefault(n, []).append((item.name, rep.passed, item.nodeid))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        ok = all(p for _, p, _ in parts)
        notes = []
        for name, passed, nodeid in parts:
            detail = "; ".join(_DETAILS.get(nodeid, [])) or ("ok" if passed else "failed")
            notes.append(f"{name}[{'pass' if passed else 'FAIL'}]: {detail}")
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} | " + " | ".join(notes))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
