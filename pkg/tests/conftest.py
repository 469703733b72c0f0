import re

import pytest

_OUTCOMES: dict[int, str] = {}
_DETAILS: dict[int, list[str]] = {}
_CRIT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


@pytest.fixture
def note(request):
    """Attach a line of detail to the current acceptance criterion's summary."""
    m = _CRIT.search(request.node.nodeid)
    key = int(m.group(1)) if m else None

    def add(text):
        if key is not None:
            _DETAILS.setdefault(key, []).append(str(text))

    return add


def pytest_runtest_logreport(report):
    m = _CRIT.search(report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _OUTCOMES.get(key, "passed")
        _OUTCOMES[key] = report.outcome if prev == "passed" else prev


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_OUTCOMES):
        verdict = {"passed": "PASS", "skipped": "SKIP"}.get(_OUTCOMES[key], "FAIL")
        tr.write_line(f"criterion {key:2d}: {verdict}")
        for line in _DETAILS.get(key, []):
            tr.write_line(f"    {line}")
