"""Tests for the sweep executor."""
import sys
import os
import time

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from nlwitness.executor import SweepExecutor
from nlwitness.logger import logger


@pytest.fixture(autouse=True)
def _warn_level():
    logger.set_level("WARN")
    yield
    logger.set_level("WARN")


# --- Helper builders ---

def _collect():
    events = []
    return events, lambda event_type, data: events.append((event_type, data))


def _slow_square(x):
    # later points finish first when run in parallel
    time.sleep(0.01 * (5 - x))
    return x * x


# --- Tests ---

def test_results_in_point_order():
    executor = SweepExecutor(lambda x: x + 1, [3, 1, 2])
    assert executor.execute() == [4, 2, 3]


def test_parallel_results_in_point_order():
    executor = SweepExecutor(_slow_square, range(5), workers=4)
    assert executor.execute() == [0, 1, 4, 9, 16]
    assert sorted(executor.timings) == [0, 1, 2, 3, 4]


def test_event_sequence():
    events, handler = _collect()
    SweepExecutor(lambda x: x, [0, 1], event_handler=handler).execute()
    types = [t for t, _ in events]
    assert types[0] == "start"
    assert types[-2:] == ["profiler_summary", "complete"]
    assert types.count("point_start") == 2
    assert types.count("point_complete") == 2
    assert events[0][1]["total_points"] == 2


def test_point_error_is_reported_and_raised():
    events, handler = _collect()

    def boom(x):
        if x == 1:
            raise RuntimeError("bad point")
        return x

    with pytest.raises(RuntimeError):
        SweepExecutor(boom, [0, 1, 2], event_handler=handler).execute()
    errors = [d for t, d in events if t == "point_error"]
    assert len(errors) == 1
    assert errors[0]["index"] == 1
    assert "bad point" in errors[0]["error"]
    assert "RuntimeError" in errors[0]["stack_trace"]


def test_log_capture_uses_point_keys():
    events, handler = _collect()

    def noisy(x):
        logger.warn(f"value {x}")
        return x

    executor = SweepExecutor(noisy, [0.0, 0.5], scope="scan:p", keys=["0.0", "0.5"],
                             event_handler=handler)
    executor.execute()
    entries = executor.log_entries
    assert [e["key"] for e in entries] == ["0.0", "0.5"]
    assert all(e["scope"] == "scan:p" for e in entries)
    assert entries[1]["message"] == "value 0.5"
    assert sum(1 for t, _ in events if t == "log") == 2


def test_log_context_cleared_after_run(capsys):
    SweepExecutor(lambda x: x, [0], scope="trial").execute()
    logger.warn("outside")
    assert "[WARN] [nlwitness:-] outside" in capsys.readouterr().err


def test_parallel_log_capture_keeps_keys_apart():
    def tagged(x):
        time.sleep(0.005)
        logger.warn(f"point {x}")
        return x

    executor = SweepExecutor(tagged, range(8), workers=4, keys=[f"k{i}" for i in range(8)])
    executor.execute()
    for entry in executor.log_entries:
        assert entry["message"] == f"point {entry['key'][1:]}"


def test_empty_sweep():
    assert SweepExecutor(lambda x: x, []).execute() == []
