import re

import pytest

N_CRITERIA = 15
_LINES: dict[int, str] = {}
_COLLECTED: set[int] = set()


@pytest.fixture
def criterion():
    """record(n, ok, detail): one pass/fail line per acceptance criterion."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[n] = line
        print(line)
        return ok

    return record


def pytest_collection_modifyitems(items):
    for item in items:
        m = re.match(r"test_c(\d\d)_", item.name)
        if m and item.module.__name__.endswith("test_acceptance"):
            _COLLECTED.add(int(m.group(1)))


def pytest_terminal_summary(terminalreporter):
    if not _COLLECTED:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in _LINES:
            terminalreporter.write_line(_LINES[n])
        elif n in _COLLECTED:
            terminalreporter.write_line(f"criterion {n:2d}: FAIL  (did not run to completion)")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: not selected")
