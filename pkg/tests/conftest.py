"""Collects one pass/fail line per acceptance criterion and prints them after the run."""

import pytest

RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(criterion: str, passed: bool, detail: str) -> bool:
        RESULTS[criterion] = (bool(passed), detail)
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(RESULTS, key=lambda c: [int(p) if p.isdigit() else p for p in c.split(".")]):
        passed, detail = RESULTS[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
