from __future__ import annotations

import pytest

_OUTCOMES: dict[int, tuple[str, float, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    n = marker.args[0]
    detail = "" if report.passed else str(report.longrepr.reprcrash.message).splitlines()[0]
    _OUTCOMES[n] = ("PASS" if report.passed else "FAIL", report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        status, seconds, detail = _OUTCOMES[n]
        line = f"criterion {n:2d}: {status} ({seconds:.1f} s)"
        terminalreporter.write_line(line + (f"  {detail}" if detail else ""))
