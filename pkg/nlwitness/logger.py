"""Run logger shared by all NLWitness modules.

Library code just calls logger.info(), logger.debug(), etc. The sweep
executor sets a context (scope, key) and a capture handler around each
grid point or trial and clears it afterwards. Context is thread-local, so
points evaluated in parallel never tag each other's messages.
"""
import sys
import threading
from typing import Callable, Optional

LEVELS = {"DEBUG": 10, "INFO": 20, "WARN": 30, "ERROR": 40}


class RunLogger:
    """Logger that tags messages with sweep context."""

    def __init__(self, level: str = "WARN"):
        self._local = threading.local()
        self._threshold = LEVELS[level]

    def set_level(self, level: str) -> None:
        self._threshold = LEVELS[level.upper()]

    @property
    def level(self) -> str:
        return next(name for name, v in LEVELS.items() if v == self._threshold)

    def _set_context(self, scope: str, key: str, handler: Optional[Callable] = None):
        self._local.scope = scope
        self._local.key = key
        self._local.handler = handler

    def _clear_context(self):
        self._local.scope = None
        self._local.key = None
        self._local.handler = None

    def _emit(self, level: str, message: str):
        if LEVELS[level] < self._threshold:
            return
        scope = getattr(self._local, "scope", None) or "nlwitness"
        key = getattr(self._local, "key", None) or "-"
        handler = getattr(self._local, "handler", None)
        if handler:
            handler(level, scope, key, message)
        else:
            print(f"[{level}] [{scope}:{key}] {message}", file=sys.stderr)

    def debug(self, message: str):
        self._emit("DEBUG", message)

    def info(self, message: str):
        self._emit("INFO", message)

    def warn(self, message: str):
        self._emit("WARN", message)

    def error(self, message: str):
        self._emit("ERROR", message)


# Singleton logger instance
logger = RunLogger()
