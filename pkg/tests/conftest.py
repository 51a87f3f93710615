"""Shared pytest wiring.

The acceptance tests append one PASS/FAIL line per criterion to
``criterion_lines``; printing them from a terminal-summary hook keeps
them visible under fd-level capture, one line each, after the dots.
"""

criterion_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.write_line(line)
