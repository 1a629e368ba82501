import numpy as np
import pytest

from oseenflow import GridSpec

#: criterion id -> (passed, summary); filled by test_acceptance.
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(cid: str, passed: bool, summary: str) -> None:
    """Store and print one acceptance line."""
    prev = ACCEPTANCE.get(cid)
    if prev is not None:
        passed = passed and prev[0]
        summary = prev[1] + "; " + summary
    ACCEPTANCE[cid] = (passed, summary)
    print(f"[{'PASS' if passed else 'FAIL'}] {cid}: {summary}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        passed, summary = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {cid}  {summary}")


@pytest.fixture
def small_grid():
    return GridSpec(3.0, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
