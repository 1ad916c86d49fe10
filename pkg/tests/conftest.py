"""Shared pytest wiring.

Acceptance tests record one verdict line each; the terminal summary hook
prints them together at the end of the run so the pass/fail ledger is
visible even when per-test output is captured.
"""

ACCEPTANCE_LINES = []


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    verdict = "PASS" if passed else "FAIL"
    line = f"{verdict}  {name}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
