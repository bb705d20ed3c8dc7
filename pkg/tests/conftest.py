"""Pytest hooks: acceptance results are echoed in the terminal summary."""

from __future__ import annotations

# test_acceptance records one entry per criterion here; the summary hook
# prints them even when pytest captures stdout.
ACCEPTANCE_RESULTS: dict[str, bool] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok in ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}")
