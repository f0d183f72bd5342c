from __future__ import annotations

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE_RESULTS.items()):
        status = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{status}  {name}")
