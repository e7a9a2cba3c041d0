"""Collects acceptance outcomes and prints one PASS/FAIL/SKIP line per criterion."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

_outcomes = {}


def _criterion(item):
    mark = item.get_closest_marker("acceptance")
    return mark.args[0] if mark else None


def pytest_collection_modifyitems(items):
    for item in items:
        n = _criterion(item)
        if n is not None:
            item.user_properties.append(("criterion", n))


def pytest_runtest_logreport(report):
    n = dict(report.user_properties).get("criterion")
    if n is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _outcomes.get(n, "PASS")
        now = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if prev == "FAIL" or (prev == "SKIP" and now == "PASS"):
            now = prev
        _outcomes[n] = now


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        terminalreporter.write_line(f"AC{n:<3d}{_outcomes[n]:5s} {CRITERIA[n]}")
