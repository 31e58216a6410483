"""Prints one pass/fail line per acceptance criterion as it runs."""


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance" in report.nodeid:
        label = "ACCEPTANCE"
    elif "test_secondary_conformance" in report.nodeid:
        label = "ACCEPTANCE-SECONDARY"
    else:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    print(f"\n[{label}] {name}: {outcome} ({report.duration:.1f}s)")
