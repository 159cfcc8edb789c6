"""Shared pytest plumbing: a per-criterion summary section for the acceptance run."""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.rsplit("::", 1)[-1]
            m = _CRITERION.match(name)
            if m:
                rows.append((int(m.group(1)), name, outcome == "passed"))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok in sorted(rows):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {name}")
