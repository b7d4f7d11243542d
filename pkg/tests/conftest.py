import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    if call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception):
        ok = None
    note = getattr(item, "criterion_note", "")
    _ACCEPTANCE[number] = (title, ok, note)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, note = _ACCEPTANCE[number]
        status = {True: "PASS", False: "FAIL", None: "INFO"}[ok]
        line = f"[{status}] {number:>2}. {title}"
        terminalreporter.write_line(line + (f"  ({note})" if note else ""))
