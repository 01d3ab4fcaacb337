"""Tests for the run logger."""
import sys
import os
import threading

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from nlwitness.logger import RunLogger


def test_default_output_goes_to_stderr(capsys):
    log = RunLogger()
    log.warn("careful")
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.strip() == "[WARN] [nlwitness:-] careful"


def test_level_threshold(capsys):
    log = RunLogger()
    log.info("hidden")
    log.debug("hidden")
    assert capsys.readouterr().err == ""
    log.set_level("debug")
    assert log.level == "DEBUG"
    log.debug("shown")
    assert "shown" in capsys.readouterr().err


def test_handler_receives_context():
    log = RunLogger()
    seen = []
    log._set_context("scan:phi", "3.14", lambda *args: seen.append(args))
    log.error("boom")
    log._clear_context()
    assert seen == [("ERROR", "scan:phi", "3.14", "boom")]


def test_context_is_thread_local():
    log = RunLogger()
    seen = []
    log._set_context("main", "m", lambda *args: seen.append(args))

    def worker():
        log._set_context("worker", "w", lambda *args: seen.append(args))
        log.warn("from worker")
        log._clear_context()

    t = threading.Thread(target=worker)
    t.start()
    t.join()
    log.warn("from main")
    log._clear_context()
    assert ("WARN", "worker", "w", "from worker") in seen
    assert ("WARN", "main", "m", "from main") in seen
