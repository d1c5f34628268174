import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> [title, all passed so far, details]
_CRITERIA: dict[int, list] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True, []])
    if call.excinfo is not None:
        entry[1] = False
        entry[2].append(f"{item.name}: {call.excinfo.typename}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
