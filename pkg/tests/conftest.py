from __future__ import annotations

import _support


def pytest_terminal_summary(terminalreporter):
    if not _support.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_support.VERDICTS):
        terminalreporter.write_line(_support.VERDICTS[number])
