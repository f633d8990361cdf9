import pytest

from polytrade import lp as L
from polytrade.suites import SUITES

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def suite_runs():
    """Every property suite at its default size and seed 0, with LP tallies for the whole batch."""
    L.reset_stats()
    results = {name: fn(seed=0) for name, fn in SUITES.items()}
    return results, dict(L.STATS)


@pytest.fixture
def record():
    def _record(criterion: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
