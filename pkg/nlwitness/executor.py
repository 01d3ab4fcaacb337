"""Sweep executor with event hooks.

Evaluates one callable over an ordered list of points (scan grid values
or simulation trials). Points may run on a thread pool; results always
come back in point order.
"""
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

from nlwitness.logger import logger as run_logger


class SweepExecutor:
    """Runs fn(point) for every point, emitting start/point/complete events."""

    def __init__(
        self,
        fn: Callable[[Any], Any],
        points: Sequence[Any],
        scope: str = "sweep",
        workers: int = 1,
        event_handler: Optional[Callable] = None,
        keys: Optional[Sequence[str]] = None,
    ):
        self.fn = fn
        self.points = list(points)
        self.scope = scope
        self.workers = max(1, int(workers))
        self.event_handler = event_handler
        self.keys = list(keys) if keys is not None else [str(i) for i in range(len(self.points))]
        self._log_entries: List[dict] = []
        self._point_timings: Dict[int, float] = {}
        self._lock = threading.Lock()

    @property
    def log_entries(self) -> List[dict]:
        return list(self._log_entries)

    @property
    def timings(self) -> Dict[int, float]:
        return dict(self._point_timings)

    def _emit(self, event_type: str, **data):
        if self.event_handler:
            with self._lock:
                self.event_handler(event_type, data)

    def _log_handler(self, level: str, scope: str, key: str, message: str):
        """Captures messages logged while a point runs."""
        entry = {
            "level": level,
            "scope": scope,
            "key": key,
            "message": message,
            "timestamp": time.time(),
        }
        with self._lock:
            self._log_entries.append(entry)
        self._emit("log", **entry)

    def _run_point(self, index: int) -> Any:
        key = self.keys[index]
        start = time.time()
        self._emit("point_start", index=index, key=key)
        run_logger._set_context(self.scope, key, self._log_handler)
        try:
            result = self.fn(self.points[index])
        except Exception as exc:
            duration = (time.time() - start) * 1000
            with self._lock:
                self._point_timings[index] = duration
            self._emit("point_error", index=index, key=key, error=str(exc),
                       stack_trace=traceback.format_exc(), duration_ms=duration)
            raise
        finally:
            run_logger._clear_context()
        duration = (time.time() - start) * 1000
        with self._lock:
            self._point_timings[index] = duration
        self._emit("point_complete", index=index, key=key, duration_ms=duration)
        return result

    def execute(self) -> List[Any]:
        """Evaluate every point. Returns results ordered by point index."""
        total = len(self.points)
        self._emit("start", total_points=total, workers=self.workers)
        start = time.time()

        if self.workers == 1 or total <= 1:
            results = [self._run_point(i) for i in range(total)]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(self._run_point, range(total)))

        total_ms = (time.time() - start) * 1000
        self._emit(
            "profiler_summary",
            total_ms=round(total_ms, 2),
            slowest_point=max(self._point_timings, key=self._point_timings.get)
            if self._point_timings
            else None,
        )
        self._emit("complete", total_ms=total_ms)
        return results
