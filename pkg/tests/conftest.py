"""Prints the acceptance verdicts, one line per criterion, after the run."""


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], outcome, props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, outcome, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if outcome == 'passed' else 'FAIL'}  {detail}")
