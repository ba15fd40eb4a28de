_criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if call.when == "setup" and call.excinfo is not None:
        _criteria[label] = "FAIL"
    elif call.when == "call":
        _criteria[label] = "FAIL" if call.excinfo is not None else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(f"{_criteria[label]}  {label}")
