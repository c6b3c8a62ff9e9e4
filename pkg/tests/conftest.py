import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import checks  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not checks.CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(checks.CRITERIA):
        terminalreporter.write_line(checks.CRITERIA[k])
