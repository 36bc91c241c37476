import pytest

_RESULTS = {}


def pytest_runtest_logreport(report):
    marker = report.keywords.get("criterion_id")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _RESULTS[report.nodeid] = (report.outcome == "passed", report.duration)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            item.keywords["criterion_id"] = mark.args[0]
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (ok, duration) in sorted(_RESULTS.items(), key=lambda kv: _order(kv[0])):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({duration:.2f}s)")


def _order(nodeid):
    name = nodeid.split("::")[-1]
    digits = "".join(ch for ch in name.split("_")[1] if ch.isdigit()) if "_" in name else ""
    return (int(digits) if digits else 99, name)
