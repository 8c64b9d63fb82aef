import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)$")
_outcomes: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    num, label = int(m.group(1)), m.group(2).replace("_", " ")
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed or num not in _outcomes:
        if failed:
            _outcomes[num] = ("FAIL", label)
        elif report.when == "call":
            _outcomes[num] = ("PASS", label)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        status, label = _outcomes[num]
        terminalreporter.write_line(f"{status} criterion {num:2d}: {label}")
