import time
from pathlib import Path

import numpy as np
import pytest

from boutmetrics.core import FrameSeries, LabelSet

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


def series(labels, names=None, background_index=0):
    """Build a FrameSeries from raw indices; names default to '0', '1', ..."""
    labels = list(labels)
    if names is None:
        top = max(labels, default=0)
        names = tuple(str(i) for i in range(max(top, 2) + 1))
    return FrameSeries(np.array(labels, dtype=np.int64), LabelSet(tuple(names), background_index))


# acceptance verdicts, echoed again in the terminal summary
ACCEPTANCE: list = []
SUITE_BUDGET_S = 60.0


def verdict(tag: str, ok: bool, detail: str = "") -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}" + (f": {detail}" if detail else "")
    ACCEPTANCE.append(line)
    print(line, flush=True)
    return ok


def pytest_sessionstart(session):
    session.config._bm_start = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - session.config._bm_start
    session.config._bm_elapsed = elapsed
    if elapsed > SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    elapsed = getattr(config, "_bm_elapsed", time.perf_counter() - config._bm_start)
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
    ok = elapsed <= SUITE_BUDGET_S
    terminalreporter.write_line(
        f"[{'PASS' if ok else 'FAIL'}] #10 full suite wall time {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
    )
