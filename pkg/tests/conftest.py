import re

_results = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_", report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    if report.when == "call" or report.failed:
        _results[key] = (report.passed and _results.get(key, (True, 0))[0], report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for key in sorted(_results):
        ok, seconds = _results[key]
        terminalreporter.write_line(f"criterion {key} [{CRITERIA[key]}]: {'PASS' if ok else 'FAIL'} ({seconds:.1f}s)")
