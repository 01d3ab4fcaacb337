"""Command-line front end.

    python -m nlwitness eval  --witness presets/witnesses/w0.json --state bell
    python -m nlwitness scan  --preset fig2
    python -m nlwitness check-access --witness ... --unitary XI
    python -m nlwitness simulate --preset bell --shots 1000 --trials 200

Exit codes: 0 success (whatever the detection outcome), 2 configuration
errors, 3 failed numerical preconditions, 4 check-access without an
analytic-accessible verdict.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from nlwitness import __version__
from nlwitness.accessibility import certify, check_analytic, check_sufficient
from nlwitness.cj_map import WitnessMap, map_from_witness
from nlwitness.executor import SweepExecutor
from nlwitness.logger import logger
from nlwitness.models import ConfigError, NLWitnessError, RunConfig, ScanSpec, StateSpec
from nlwitness.nonlinear import (
    IterationConfig,
    is_involution,
    iterate,
    moment_matrix,
    w_infinity,
    w_nl_first,
)
from nlwitness.operators import Operator, is_psd
from nlwitness.states import make
from nlwitness.stats import detection_rate, propagate, simulate_expectations
from nlwitness.unitaries import resolve_unitary
from nlwitness.validator import validate_run_config
from nlwitness.witness import LocalDecomposition, assemble, load_decomposition

PRESETS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")
PRESETS = ("fig1", "fig1-swap", "fig2", "bell")

CSV_HEADER = ["param", "w_linear", "w_1", "w_inf", "diverged", "detected_linear", "detected_nonlinear"]

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NOT_ACCESSIBLE = 0, 2, 3, 4


# --- Serialization ---

def _json_safe(value: Any) -> Any:
    """Convert numpy types to JSON-safe values; non-finite floats become null."""
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    return value


def _dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(_json_safe(payload), indent=2) + "\n"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# --- Argument parsing ---

def _parse_number(token: str) -> float:
    """Float with an optional 'pi' factor: '2pi', '-pi', '0.5pi', 'pi/2'."""
    t = token.strip().lower()
    if "pi" in t:
        head, _, tail = t.partition("pi")
        factor = 1.0 if head in ("", "+") else -1.0 if head == "-" else float(head)
        value = factor * math.pi
        if tail.startswith("/"):
            value /= float(tail[1:])
        elif tail:
            raise ValueError(token)
        return value
    return float(t)


def parse_scan(text: str) -> Dict[str, Any]:
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError("scan", f"expected axis:start:end:steps, got '{text}'")
    axis, start, end, steps = parts
    try:
        return {"axis": axis, "start": _parse_number(start), "end": _parse_number(end), "steps": int(steps)}
    except ValueError as exc:
        raise ConfigError("scan", f"cannot parse '{text}': {exc}") from exc


def parse_state(text: str) -> Dict[str, Any]:
    """Inline JSON, a path to a JSON file, or a bare family name."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            return json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError("state", f"invalid JSON: {exc}") from exc
    if os.path.isfile(stripped):
        with open(stripped, "r", encoding="utf-8") as f:
            try:
                return json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError("state", f"{stripped} is not valid JSON: {exc}") from exc
    return {"family": stripped}


def parse_unitary(text: str):
    stripped = text.strip()
    if stripped.startswith("["):
        try:
            return json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError("unitary", f"invalid JSON matrix: {exc}") from exc
    return stripped


def load_preset(name: str) -> Dict[str, Any]:
    """Load presets/<name>.json; a relative witness path is taken from the presets directory."""
    safe_name = os.path.basename(name)
    if safe_name != name or ".." in name:
        raise ConfigError("preset", f"invalid preset name '{name}'")
    path = os.path.join(PRESETS_DIR, f"{safe_name}.json")
    if not os.path.isfile(path):
        raise ConfigError("preset", f"preset '{name}' not found")
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    witness = data.get("witness")
    if witness and not os.path.isabs(witness):
        data["witness"] = os.path.join(PRESETS_DIR, witness)
    return data


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=PRESETS, help="start from a shipped configuration")
    common.add_argument("--witness", help="witness decomposition JSON file")
    common.add_argument("--state", help="state spec: JSON, JSON file, or family name")
    common.add_argument("--unitary", help="swap_AA', identity, a Pauli string, or a JSON matrix")
    common.add_argument("--n", type=int, help="number of iteration steps")
    common.add_argument("--frame", choices=("projector", "choi"))
    common.add_argument("--scan", help="axis:start:end:steps, e.g. phi:0:2pi:101")
    common.add_argument("--shots", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="nlwitness",
        description="Accessible nonlinear entanglement witnesses from local measurements.",
    )
    parser.add_argument("--version", action="version", version=f"nlwitness {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="evaluate one state")
    sub.add_parser("scan", parents=[common], help="scan phi or p and emit CSV")
    sub.add_parser("check-access", parents=[common], help="certify accessibility")
    sub.add_parser("simulate", parents=[common], help="finite-shot simulation")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Preset values, overridden by every flag that was given."""
    merged: Dict[str, Any] = load_preset(args.preset) if args.preset else {}
    merged.pop("description", None)
    for field in ("witness", "n", "frame", "shots", "trials", "seed", "workers", "out", "format"):
        value = getattr(args, field)
        if value is not None:
            merged[field] = value
    if args.state is not None:
        merged["state"] = parse_state(args.state)
    if args.unitary is not None:
        merged["unitary"] = parse_unitary(args.unitary)
    if args.scan is not None:
        merged["scan"] = parse_scan(args.scan)
    if "witness" not in merged:
        raise ConfigError("witness", "no witness file given (use --witness or --preset)")
    return RunConfig.model_validate(merged)


# --- Shared setup ---

class Setup:
    """Everything a command needs, loaded once from a RunConfig."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.decomposition: LocalDecomposition = load_decomposition(cfg.witness)
        d = self.decomposition
        self.map: WitnessMap = map_from_witness(assemble(d), d.dA, d.dB)
        self.u: Operator = resolve_unitary(cfg.unitary, d.dA)
        self.iteration = IterationConfig.constant(
            self.u, n_max=cfg.n, frame=cfg.frame, tolerances=cfg.tolerances,
        )
        self.analytic = is_involution(self.u, cfg.tolerances.hermitian)
        logger.info(
            f"witness {os.path.basename(cfg.witness)}: dA={d.dA} dB={d.dB} terms={d.size}, "
            f"U {'involutive' if self.analytic else 'general'}"
        )


def _evaluate_point(setup: Setup, state_spec: StateSpec) -> Dict[str, Any]:
    cfg = setup.cfg
    rho = make(state_spec)
    it = iterate(rho, setup.map, setup.iteration)
    w_linear = it.w_values[0]
    w_1 = it.w_values[1] if len(it.w_values) > 1 else w_linear
    if setup.analytic:
        w_inf = w_infinity(rho, setup.map, setup.u, cfg.frame, cfg.tolerances)
        diverged = w_inf.diverges
        limit = w_inf.value
        case = w_inf.case
        diverged_at = w_inf.diverged_at
    else:
        diverged, limit, case, diverged_at = False, it.w_last, "finite-n", None
    detected_nonlinear = diverged or (limit is not None and limit < 0) or it.detected
    return {
        "state": rho,
        "iteration": it,
        "w_linear": w_linear,
        "w_1": w_1,
        "w_inf": limit,
        "diverged": diverged,
        "case": case,
        "diverged_at": diverged_at,
        "detected_linear": w_linear < 0,
        "detected_nonlinear": detected_nonlinear,
    }


# --- Commands ---

def cmd_eval(cfg: RunConfig) -> int:
    setup = Setup(cfg)
    point = _evaluate_point(setup, cfg.state)
    it = point["iteration"]
    cert = certify(setup.decomposition, setup.map, setup.u, cfg.tolerances.span)
    moments = Operator.from_array(moment_matrix(point["state"], setup.map, setup.u, cfg.frame))
    report = {
        "command": "eval",
        "w": it.w_values,
        "c": it.c_values,
        "w_linear": point["w_linear"],
        "w_nl_first": w_nl_first(point["state"], setup.map, setup.u, cfg.frame, cfg.tolerances),
        "moment_psd": is_psd(moments, cfg.tolerances.psd),
        "w_inf": point["w_inf"],
        "diverges": point["diverged"],
        "case": point["case"],
        "diverged_at": point["diverged_at"],
        "kappa": it.kappa,
        "kappa_inv": it.kappa_inv,
        "abs_k": abs(it.k_value),
        "abs_c": abs(it.c_value),
        "abs_d": abs(it.d_value),
        "detected_linear": point["detected_linear"],
        "detected_nonlinear": point["detected_nonlinear"],
        "certificate": cert.verdict,
        "config": cfg.dump(),
    }
    _write(_dumps(report), cfg.out)
    return EXIT_OK


def _scan_states(cfg: RunConfig) -> Tuple[List[StateSpec], np.ndarray]:
    scan: ScanSpec = cfg.scan
    grid = np.linspace(scan.start, scan.end, scan.steps)
    return [cfg.state.model_copy(update={scan.axis: float(x)}) for x in grid], grid


def cmd_scan(cfg: RunConfig) -> int:
    setup = Setup(cfg)
    specs, grid = _scan_states(cfg)
    executor = SweepExecutor(
        lambda spec: _evaluate_point(setup, spec),
        specs,
        scope=f"scan:{cfg.scan.axis}",
        workers=cfg.workers,
        keys=[_fmt(x) for x in grid],
    )
    points = executor.execute()

    rows = []
    for x, pt in zip(grid, points):
        rows.append({
            "param": float(x),
            "w_linear": pt["w_linear"],
            "w_1": pt["w_1"],
            "w_inf": None if pt["diverged"] else pt["w_inf"],
            "diverged": int(pt["diverged"]),
            "detected_linear": int(pt["detected_linear"]),
            "detected_nonlinear": int(pt["detected_nonlinear"]),
        })

    if (cfg.format or "csv") == "json":
        _write(_dumps({"command": "scan", "rows": rows, "config": cfg.dump()}), cfg.out)
        return EXIT_OK

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            _fmt(r["param"]),
            _fmt(r["w_linear"]),
            _fmt(r["w_1"]),
            "" if r["w_inf"] is None else _fmt(r["w_inf"]),
            r["diverged"],
            r["detected_linear"],
            r["detected_nonlinear"],
        ])
    _write(buf.getvalue(), cfg.out)
    sidecar = _dumps({"command": "scan", "config": cfg.dump()})
    if cfg.out:
        _write(sidecar, f"{cfg.out}.config.json")
    else:
        sys.stderr.write(sidecar)
    return EXIT_OK


def cmd_check_access(cfg: RunConfig) -> int:
    setup = Setup(cfg)
    cert = check_analytic(setup.decomposition, setup.map, setup.u, cfg.tolerances.span)
    sufficient = check_sufficient(setup.decomposition, setup.map, setup.u, cfg.tolerances.span)
    report = dict(cert.to_json())
    report["sufficient"] = sufficient.verdict == "sufficient-accessible"
    report["command"] = "check-access"
    report["config"] = cfg.dump()
    _write(_dumps(report), cfg.out)
    if cert.verdict != "analytic-accessible":
        logger.warn(f"not certified; worst residual {cert.worst_residual:.3e}")
        return EXIT_NOT_ACCESSIBLE
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    setup = Setup(cfg)
    d = setup.decomposition
    rho = make(cfg.state)
    cert = certify(d, setup.map, setup.u, cfg.tolerances.span)
    record = simulate_expectations(rho, d, cfg.shots, seed=cfg.seed)
    estimate = propagate(record, d, setup.map, setup.iteration, cert)
    rates = detection_rate(
        rho, d, setup.map, setup.iteration,
        shots=cfg.shots, trials=cfg.trials, seed=cfg.seed, access=cert, workers=cfg.workers,
    )
    report = {
        "command": "simulate",
        "seed": cfg.seed,
        "expectations": {
            "values": record.estimates.values,
            "stderr": record.stderr,
            "shots": record.shots,
        },
        "w": estimate.w_values,
        "w_stderr": estimate.stderr,
        "significance": estimate.significance,
        "linear_rate": rates.linear_rate,
        "nonlinear_rate": rates.nonlinear_rate,
        "dominance_violations": rates.dominance_violations,
        "trials": rates.trials,
        "certificate": cert.verdict,
        "note": "detection rates are finite-trial Monte-Carlo frequencies, verdicts use w_n at n = n_max",
        "config": cfg.dump(),
    }
    _write(_dumps(report), cfg.out)
    return EXIT_OK


COMMAND_HANDLERS = {
    "eval": cmd_eval,
    "scan": cmd_scan,
    "check-access": cmd_check_access,
    "simulate": cmd_simulate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger.set_level("DEBUG" if args.verbose else "ERROR" if args.quiet else "WARN")

    try:
        cfg = resolve_config(args)
        issues = validate_run_config(cfg, args.command)
        for issue in issues:
            where = f" ({issue['field']})" if issue["field"] else ""
            if issue["level"] == "error":
                logger.error(f"{issue['message']}{where}")
            elif issue["level"] == "warning":
                logger.warn(f"{issue['message']}{where}")
            else:
                logger.info(f"{issue['message']}{where}")
        if any(i["level"] == "error" for i in issues):
            return EXIT_CONFIG
        return COMMAND_HANDLERS[args.command](cfg)
    except ConfigError as exc:
        logger.error(str(exc))
        return EXIT_CONFIG
    except ValidationError as exc:
        for err in exc.errors():
            field = ".".join(str(p) for p in err["loc"])
            logger.error(f"Invalid config field '{field}': {err['msg']}")
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        logger.error(f"cannot read input: {exc}")
        return EXIT_CONFIG
    except NLWitnessError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_PRECONDITION
