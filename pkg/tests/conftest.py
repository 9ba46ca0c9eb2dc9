import re

ACCEPTANCE_LINES = []


def _order(line):
    m = re.match(r"criterion (\d+)(\w*)", line)
    return (int(m.group(1)), m.group(2)) if m else (99, line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=_order):
        terminalreporter.write_line(line)
