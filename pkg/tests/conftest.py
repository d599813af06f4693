"""Prints one PASS/FAIL line per acceptance gate after the run."""

_gate_results = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::test_", 1)[-1]
    _gate_results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _gate_results:
        return
    terminalreporter.section("acceptance gates")
    for name, outcome in _gate_results:
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{word} {name}")
