import time
from contextlib import contextmanager

import pytest

ACCEPTANCE = []
FULL_SUITE_LIMIT_S = 60.0
_start = {}


@contextmanager
def criterion_record(name):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE.append((name, False, f"{time.perf_counter() - t0:.2f}s; {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"))
        raise
    ACCEPTANCE.append((name, True, f"{time.perf_counter() - t0:.2f}s"))


@pytest.fixture
def criterion():
    return criterion_record


def pytest_sessionstart(session):
    _start["t"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    elapsed = time.perf_counter() - _start.get("t", time.perf_counter())
    ok = elapsed < FULL_SUITE_LIMIT_S
    terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  full test suite under {FULL_SUITE_LIMIT_S:.0f} s  ({elapsed:.1f}s)")


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _start.get("t", time.perf_counter())
    if elapsed >= FULL_SUITE_LIMIT_S and session.exitstatus == 0:
        session.exitstatus = 1
