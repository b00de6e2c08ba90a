"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

from collections import defaultdict

TITLES = {
    1: "sphere Christoffel and curvature closed forms",
    2: "Hamilton vector field defining property (oblique sphere)",
    3: "SE(3) curvature closed form, energy drift and order-4 convergence",
    4: "Grassmann lifted Hamilton field and lifted curvature",
    5: "Kim-McCann fixed rank metric, connection and cross-curvature sign",
    6: "Kim-McCann Grassmann cross-curvature signs",
    7: "structural suites on every zoo manifold",
    8: "Lyapunov and polar identities",
}

_outcomes = defaultdict(list)


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _outcomes[number].append(report.passed and report.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(TITLES):
        results = _outcomes.get(number)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {TITLES[number]}")
