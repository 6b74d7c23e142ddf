import pytest

CRITERIA = {
    1: "optimizer reproduces the 0.8/0.82 near-optimal schedule",
    2: "eta identity over 1e4 random complex pairs",
    3: "Elitzur-Vaidman preset",
    4: "Zeno closed form",
    5: "Fabry-Perot oracle",
    6: "random-protocol property sweep",
    7: "accounting invariants on every run",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _outcomes.setdefault(marker.args[0], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            terminalreporter.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(
            f"criterion {n}: {status}  {title} ({sum(results)}/{len(results)} checks passed)"
        )
