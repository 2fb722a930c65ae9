import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    ident, title = marker.args
    ok = call.excinfo is None
    prev = _RESULTS.get(ident)
    if prev is None or prev[0] == "PASS":
        _RESULTS[ident] = ("PASS" if ok else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ident in sorted(_RESULTS):
        status, title = _RESULTS[ident]
        terminalreporter.write_line(f"AC{ident:<2} {status}  {title}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20191029)
