"""Shared test plumbing: surface the acceptance-gate result lines.

pytest captures stdout at the file-descriptor level, so the per-criterion
pass/fail lines are collected here and emitted in the terminal summary,
where they are always visible.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
