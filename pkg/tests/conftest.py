import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m:
                continue
            n, name = int(m.group(1)), m.group(2)
            if rep.when == "call" or rep.outcome != "passed":
                prev = outcomes.get(n, (name, "PASS"))[1]
                outcomes[n] = (name, "FAIL" if rep.outcome != "passed" or prev == "FAIL" else "PASS")
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcomes):
        name, verdict = outcomes[n]
        terminalreporter.write_line(f"{verdict} criterion {n:2d}: {name.replace('_', ' ')}")
