"""Finite-shot simulation of the term measurements and error propagation.

Detection rates are a Monte-Carlo surrogate for detection significance:
each trial simulates one experiment, and the linear and nonlinear
verdicts of a trial are computed from the same simulated record.
"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from nlwitness.cj_map import WitnessMap
from nlwitness.executor import SweepExecutor
from nlwitness.logger import logger
from nlwitness.models import ConfigError, NotAccessibleError, VanishingDenominatorError
from nlwitness.nonlinear import IterationConfig, iterate, iterate_restricted
from nlwitness.operators import DensityMatrix
from nlwitness.states import random_state
from nlwitness.witness import ExpectationVector, LocalDecomposition, linear_witness_value

FD_STEP = 1e-5


class MeasurementRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    estimates: ExpectationVector
    stderr: np.ndarray
    shots: int
    seed: Optional[int] = None


class PropagatedSequence(BaseModel):
    w_values: List[float]
    stderr: List[float]

    @property
    def significance(self) -> List[float]:
        """|w_n| / stderr_n, infinite where the error bar vanishes."""
        return [abs(w) / s if s > 0 else float("inf") for w, s in zip(self.w_values, self.stderr)]


class DetectionRates(BaseModel):
    linear_rate: float
    nonlinear_rate: float
    trials: int
    shots: int
    seed: int
    dominance_violations: int = 0


class DetectionVolume(BaseModel):
    linear: float
    nonlinear: float
    samples: int
    inclusion_violations: int


def simulate_expectations(
    rho: DensityMatrix, d: LocalDecomposition, shots: int,
    seed: Optional[int] = None, rng: Optional[np.random.Generator] = None,
) -> MeasurementRecord:
    """Sample `shots` outcomes of each A_i (x) B_i from its Born distribution."""
    if shots < 1:
        raise ConfigError("shots", "must be at least 1")
    rng = rng if rng is not None else np.random.default_rng(seed)
    means, errs, bounds = [], [], []
    for term, obs in zip(d.terms, d.observables()):
        evals, evecs = np.linalg.eigh(obs.data)
        probs = np.einsum("ij,jk,ki->i", evecs.conj().T, rho.data, evecs).real
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        counts = rng.multinomial(shots, probs)
        mean = float(counts @ evals) / shots
        if shots > 1:
            var = float(counts @ (evals - mean) ** 2) / (shots - 1)
        else:
            var = 0.0
        means.append(mean)
        errs.append(np.sqrt(max(var, 0.0) / shots))
        bounds.append(term.norm_bound)
    estimates = ExpectationVector(values=means, provenance="simulated", bounds=np.array(bounds))
    return MeasurementRecord(estimates=estimates, stderr=np.array(errs), shots=shots, seed=seed)


def propagate(
    record: MeasurementRecord, d: LocalDecomposition, m: WitnessMap, cfg: IterationConfig, access,
) -> PropagatedSequence:
    """Delta-method error bars on w_0..w_n from central finite differences."""
    if access is None:
        raise NotAccessibleError("certificate_missing")
    base = np.asarray(record.estimates.values, dtype=float)

    def w_of(values: np.ndarray) -> np.ndarray:
        v = ExpectationVector(values=values, provenance="simulated")
        return np.array(iterate_restricted(v, d, m, cfg, access).w_values)

    w = w_of(base)
    var = np.zeros_like(w)
    for i, s in enumerate(record.stderr):
        if s == 0:
            continue
        step = np.zeros_like(base)
        step[i] = FD_STEP
        grad = (w_of(base + step) - w_of(base - step)) / (2 * FD_STEP)
        var += (grad * s) ** 2
    return PropagatedSequence(w_values=w.tolist(), stderr=np.sqrt(var).tolist())


def _trial_verdicts(rho, d, m, cfg, access, shots, seed):
    def run(trial: int):
        rng = np.random.default_rng([seed, trial])
        record = simulate_expectations(rho, d, shots, seed=seed, rng=rng)
        w_lin = linear_witness_value(record.estimates, d)
        try:
            w_nl = iterate_restricted(record.estimates, d, m, cfg, access).w_last
        except VanishingDenominatorError as exc:
            logger.warn(f"trial {trial}: {exc}; nonlinear verdict falls back to linear")
            w_nl = w_lin
        return w_lin < 0, w_nl < 0
    return run


def detection_rate(
    rho: DensityMatrix, d: LocalDecomposition, m: WitnessMap, cfg: IterationConfig,
    shots: int, trials: int, seed: int, access, workers: int = 1,
    event_handler=None,
) -> DetectionRates:
    """Fraction of simulated experiments detected by the linear and nonlinear witness.

    Trial i draws from default_rng([seed, i]), so results do not depend on
    the number of workers.
    """
    if trials < 1:
        raise ConfigError("trials", "must be at least 1")
    executor = SweepExecutor(
        _trial_verdicts(rho, d, m, cfg, access, shots, seed),
        range(trials),
        scope="trial",
        workers=workers,
        event_handler=event_handler,
    )
    verdicts = executor.execute()
    lin = np.array([v[0] for v in verdicts])
    nl = np.array([v[1] for v in verdicts])
    violations = int(np.sum(lin & ~nl))
    if violations:
        logger.warn(f"{violations} trials detected linearly but not nonlinearly")
    return DetectionRates(
        linear_rate=float(lin.mean()),
        nonlinear_rate=float(nl.mean()),
        trials=trials,
        shots=shots,
        seed=seed,
        dominance_violations=violations,
    )


def detection_volume(
    d: LocalDecomposition, m: WitnessMap, cfg: IterationConfig, samples: int, seed: int,
) -> DetectionVolume:
    """Share of random states detected linearly vs after the nonlinear iteration."""
    rng = np.random.default_rng(seed)
    w = m.witness
    lin_hits = nl_hits = violations = 0
    for _ in range(samples):
        rho = random_state((d.dA, d.dB), rng)
        w0 = float(np.vdot(w.data, rho.data).real)
        w_n = iterate(rho, m, cfg).w_last
        lin_hits += w0 < 0
        nl_hits += w_n < 0
        violations += (w0 < 0) and not (w_n < 0)
    return DetectionVolume(
        linear=lin_hits / samples,
        nonlinear=nl_hits / samples,
        samples=samples,
        inclusion_violations=int(violations),
    )
