"""Shared pytest plumbing: collect acceptance verdict lines and echo them
after the run, outside capture, so the scorecard shows in any mode."""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
