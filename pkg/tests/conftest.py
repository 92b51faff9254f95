import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> list of (clause, passed)
ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, clause): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, clause = mark.args
    ACCEPTANCE.setdefault(number, []).append((clause, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[number]
        ok = all(passed for _, passed in clauses)
        failed = [c for c, passed in clauses if not passed]
        detail = f" (failed: {'; '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}{detail}")
