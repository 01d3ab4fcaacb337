"""Run configuration validator for NLWitness.

Validates a RunConfig for a given subcommand and returns a list of issues, each a dict:
    {"level": "error"|"warning"|"info", "field": str|None, "message": str}
"""
import os
from typing import Any, Dict, List

from nlwitness.models import RunConfig

COMMANDS = ("eval", "scan", "check-access", "simulate")


def validate_run_config(cfg: RunConfig, command: str) -> List[Dict[str, Any]]:
    """Validate a run configuration and return a list of issues.

    Checks performed:
    1. Unknown subcommand (error)
    2. Witness file missing (error)
    3. Scan axis missing for scan, or present for other commands (error / warning)
    4. phi scan on a state without a phi parameter, p scan outside [0, 1] (error)
    5. CSV requested outside scan (error)
    6. Unsound iteration frame (warning)
    7. Small shot or trial counts for simulate (warning)
    8. Notes on settings that are overridden or inert (info)
    """
    issues: List[Dict[str, Any]] = []

    def add(level: str, field, message: str):
        issues.append({"level": level, "field": field, "message": message})

    # --- Check 1: Unknown subcommand ---
    if command not in COMMANDS:
        add("error", None, f"Unknown command '{command}', expected one of {', '.join(COMMANDS)}")
        return issues

    # --- Check 2: Witness file ---
    if not os.path.isfile(cfg.witness):
        add("error", "witness", f"Witness file '{cfg.witness}' does not exist")

    # --- Check 3: Scan axis ---
    if command == "scan" and cfg.scan is None:
        add("error", "scan", "scan needs --scan axis:start:end:steps")
    if command != "scan" and cfg.scan is not None:
        add("warning", "scan", f"scan settings are ignored by '{command}'")

    # --- Check 4: Scan axis fits the state ---
    if cfg.scan is not None and cfg.scan.axis == "phi" and cfg.state.family != "phi_family":
        add("error", "scan.axis",
            f"axis 'phi' needs state family 'phi_family', got '{cfg.state.family}'")
    if cfg.scan is not None and cfg.scan.axis == "p":
        outside = [x for x in (cfg.scan.start, cfg.scan.end) if not 0.0 <= x <= 1.0]
        if outside:
            add("error", "scan", f"noise parameter p must stay in [0, 1], scan reaches {outside[0]:g}")

    # --- Check 5: Output format ---
    if cfg.format == "csv" and command != "scan":
        add("error", "format", f"CSV output is only produced by 'scan', not '{command}'")

    # --- Check 6: Frame ---
    if cfg.frame == "choi":
        add("warning", "frame",
            "choi frame: only w_0 is a witness value; later w_n can be negative on separable states")

    # --- Check 7: Statistics ---
    if command == "simulate":
        if cfg.shots < 100:
            add("warning", "shots", f"{cfg.shots} shots per term gives wide error bars")
        if cfg.trials < 30:
            add("warning", "trials", f"{cfg.trials} trials gives a coarse detection rate")

    # --- Check 8: Notes ---
    if cfg.scan is not None and cfg.scan.axis == "p" and cfg.state.p != 0.0:
        add("info", "state.p", "state.p is replaced by the scan value at every grid point")
    if cfg.n == 0:
        add("info", "n", "n = 0: only the linear value is iterated")
    if cfg.workers > 1 and command in ("eval", "check-access"):
        add("info", "workers", f"'{command}' evaluates a single point; workers has no effect")

    return issues


def errors(issues: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    return [i for i in issues if i["level"] == "error"]
