"""Nonlinear improvements of a linear witness.

Everything here reduces to functionals X -> Tr(rho Lambda[X]) on operators X
over H_AA'. The full-state path evaluates them through the adjoint image
of rho; the restricted path expands Lambda[X] over the measured observables
and never sees rho. Both feed the same recurrence

    Q_0 = P,   Q_n = Q_{n-1} U_{n-1} - kappa t_{n-1} 1,
    t_n = Tr(rho Lambda[Q_n U_n]),   w_n = w_{n-1} - kappa |t_{n-1}|^2,

with kappa^-1 = Tr(rho Lambda[1]).

Frames: in the "projector" frame P is the normalized maximally entangled
projector and Lambda is rescaled by d_A, so Lambda[P] = W and every w_n is
Tr(rho Lambda[Q_n Q_n^dagger]), nonnegative on separable states. The
"choi" frame uses the unnormalized projector with the unscaled map; its
first element is still Tr(rho W) but later elements are not witnesses.
"""
import hashlib
import math
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from nlwitness.cj_map import WitnessMap, apply, apply_adjoint
from nlwitness.logger import logger
from nlwitness.models import (
    DimensionMismatchError,
    NotAccessibleError,
    NotInvolutoryError,
    NonUnitaryError,
    Tolerances,
    VanishingDenominatorError,
)
from nlwitness.operators import (
    DensityMatrix,
    Operator,
    as_bipartite,
    identity,
    max_entangled_projector,
)
from nlwitness.witness import (
    ExpectationVector,
    LocalDecomposition,
    SpanBasis,
    in_span,
    span_basis,
)

Frame = Literal["projector", "choi"]
Expect = Callable[[Operator], complex]


def unitary_digest(u: Operator) -> str:
    """Stable fingerprint of a unitary, used to bind certificates to configs."""
    rounded = np.round(u.data, 9) + 0.0
    return hashlib.sha256(rounded.tobytes()).hexdigest()[:16]


def is_involution(u: Operator, tol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(u.data @ u.data - np.eye(u.dimension))) <= tol)


class IterationConfig(BaseModel):
    """Unitaries and settings for one run of the recurrence.

    A single-element u_sequence is a constant U. Longer sequences must cover
    every step up to n_max.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u_sequence: List[Operator]
    n_max: int = Field(default=10, ge=0)
    frame: Frame = "projector"
    tolerances: Tolerances = Tolerances()

    @model_validator(mode="after")
    def _check_unitaries(self):
        if not self.u_sequence:
            raise NonUnitaryError("u_sequence is empty")
        dim = self.u_sequence[0].dimension
        for i, u in enumerate(self.u_sequence):
            if u.dimension != dim:
                raise DimensionMismatchError(f"U[{i}] has dimension {u.dimension}, expected {dim}")
            if not u.is_unitary(self.tolerances.hermitian):
                raise NonUnitaryError(f"U[{i}] is not unitary within {self.tolerances.hermitian:.0e}")
        if len(self.u_sequence) > 1 and len(self.u_sequence) < self.n_max:
            raise DimensionMismatchError(
                f"u_sequence has {len(self.u_sequence)} entries but n_max is {self.n_max}"
            )
        return self

    @classmethod
    def constant(cls, u: Operator, n_max: int = 10, **kwargs) -> "IterationConfig":
        return cls(u_sequence=[u], n_max=n_max, **kwargs)

    @property
    def u(self) -> Operator:
        return self.u_sequence[0]

    @property
    def is_analytic(self) -> bool:
        return len(self.u_sequence) == 1 and is_involution(self.u, self.tolerances.hermitian)

    def u_at(self, n: int) -> Operator:
        return self.u_sequence[0] if len(self.u_sequence) == 1 else self.u_sequence[n]


class IterationState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    q_current: Operator
    w_values: List[float]
    c_values: List[float]
    kappa_inv: float
    k_value: complex
    c_value: complex
    d_value: complex
    frame: Frame = "projector"

    @property
    def kappa(self) -> float:
        return 1.0 / self.kappa_inv

    @property
    def w_last(self) -> float:
        return self.w_values[-1]

    @property
    def detected(self) -> bool:
        return any(w < 0 for w in self.w_values)


class AnalyticQuantities(BaseModel):
    """kappa^-1, k, c, d and w_0 for a constant involutive U."""
    kappa_inv: float
    k: complex
    c: complex
    d: complex
    w0: float

    @property
    def kappa(self) -> float:
        return 1.0 / self.kappa_inv

    @property
    def ratio(self) -> float:
        """kappa |k|, which selects the convergent or divergent branch."""
        return self.kappa * abs(self.k)


class WInfinity(BaseModel):
    value: Optional[float] = None
    diverges: bool = False
    case: Literal["converges", "diverges", "saturates"]
    ratio: float
    diverged_at: Optional[int] = None

    @property
    def detected(self) -> bool:
        return self.diverges or (self.value is not None and self.value < 0)


# --- Evaluation back ends ---

def _frame_setup(m: WitnessMap, frame: Frame) -> Tuple[float, Operator]:
    """Map scale and seed operator Q_0 for the given frame."""
    p = max_entangled_projector(m.dA)
    if frame == "projector":
        return float(m.dA), p * (1.0 / m.dA)
    return 1.0, p


def _full_state_expect(rho: DensityMatrix, m: WitnessMap, scale: float) -> Expect:
    if rho.dimension != m.codomain_dim:
        raise DimensionMismatchError(
            f"state dimension {rho.dimension} does not match {m.dA}x{m.dB}"
        )
    sigma = apply_adjoint(m, rho.op).data

    def expect(x: Operator) -> complex:
        return scale * complex(np.vdot(sigma, x.data))
    return expect


def _restricted_expect(
    v: ExpectationVector, d: LocalDecomposition, m: WitnessMap, scale: float,
    basis: SpanBasis, tol: float,
) -> Expect:
    if len(v) != d.size:
        raise DimensionMismatchError(
            f"expectation vector has {len(v)} entries, decomposition has {d.size} terms"
        )
    values = np.asarray(v.values)

    def expect(x: Operator) -> complex:
        image = apply(m, x)
        member = in_span(image, basis, tol)
        if not member.inside:
            raise NotAccessibleError("image_in_V", member.residual)
        return scale * complex(np.dot(member.term_coefficients, values))
    return expect


def _kappa_inv(expect: Expect, dA: int, tol: Tolerances) -> float:
    kappa_inv = expect(identity((dA, dA))).real
    if kappa_inv <= tol.div:
        raise VanishingDenominatorError(kappa_inv, tol.div)
    return kappa_inv


def _quantities(expect: Expect, seed: Operator, u: Operator, dA: int, tol: Tolerances) -> AnalyticQuantities:
    kappa_inv = _kappa_inv(expect, dA, tol)
    w0 = expect(seed).real
    k = expect(u)
    c = expect(seed @ u)
    d = w0 - c * k / kappa_inv
    return AnalyticQuantities(kappa_inv=kappa_inv, k=k, c=c, d=d, w0=w0)


def _run_recurrence(expect: Expect, seed: Operator, cfg: IterationConfig, dA: int) -> IterationState:
    tol = cfg.tolerances
    one = identity((dA, dA))
    kappa_inv = _kappa_inv(expect, dA, tol)
    kappa = 1.0 / kappa_inv

    q = seed
    w_values = [expect(seed).real]
    c_values: List[float] = []
    for n in range(cfg.n_max):
        qu = q @ as_bipartite(cfg.u_at(n), dA, dA)
        t = expect(qu)
        c_values.append(abs(t) ** 2)
        w_values.append(w_values[-1] - kappa * c_values[-1])
        q = qu - one * (kappa * t)

    u = as_bipartite(cfg.u, dA, dA)
    k = expect(u)
    c = expect(seed @ u)
    d = w_values[0] - kappa * c * k
    logger.debug(
        f"recurrence: kappa^-1={kappa_inv:.6g} |k|={abs(k):.6g} |c|={abs(c):.6g} "
        f"w_{cfg.n_max}={w_values[-1]:.6g}"
    )
    return IterationState(
        q_current=q,
        w_values=w_values,
        c_values=c_values,
        kappa_inv=kappa_inv,
        k_value=k,
        c_value=c,
        d_value=d,
        frame=cfg.frame,
    )


def _divergence_step(q: AnalyticQuantities, floor: float) -> int:
    """First n with w_n below floor, from the closed form of the series."""
    kappa = q.kappa
    base = q.w0 - kappa * abs(q.c) ** 2
    if base < floor:
        return 1
    step = kappa * abs(q.d) ** 2
    target = (base - floor) / step
    r = q.ratio ** 2
    # smallest j with sum_{m<j} r^m > target; then n = j + 1
    if abs(r - 1.0) < 1e-12:
        j = math.floor(target) + 1
    else:
        j = max(1, math.ceil(math.log1p(target * (r - 1.0)) / math.log(r)))
        while (r ** j - 1.0) / (r - 1.0) <= target:
            j += 1
        while j > 1 and (r ** (j - 1) - 1.0) / (r - 1.0) > target:
            j -= 1
    return j + 1


def _w_infinity(q: AnalyticQuantities, tol: Tolerances) -> WInfinity:
    kappa = q.kappa
    ratio = q.ratio
    if ratio < 1.0:
        value = q.w0 - kappa * abs(q.c) ** 2 - kappa * abs(q.d) ** 2 / (1.0 - ratio ** 2)
        return WInfinity(value=value, case="converges", ratio=ratio)
    if abs(q.d) > tol.d:
        return WInfinity(
            diverges=True,
            case="diverges",
            ratio=ratio,
            diverged_at=_divergence_step(q, tol.divergence_floor),
        )
    return WInfinity(value=q.w0 - kappa * abs(q.c) ** 2, case="saturates", ratio=ratio)


def _require_involution(u: Operator, tol: Tolerances) -> None:
    if not u.is_unitary(tol.hermitian):
        raise NonUnitaryError("U is not unitary within tolerance")
    if not is_involution(u, tol.hermitian):
        raise NotInvolutoryError("the closed-form limit needs U^2 = 1")


def _check_certificate(access, cfg: IterationConfig) -> None:
    if access is None:
        raise NotAccessibleError("certificate_missing")
    if access.verdict == "not-certified":
        raise NotAccessibleError(f"certificate verdict {access.verdict}", access.worst_residual)
    if access.unitary_digest != unitary_digest(cfg.u):
        raise NotAccessibleError("certificate_unitary_mismatch")


# --- Public operations ---

def moment_matrix(rho: DensityMatrix, m: WitnessMap, u: Operator, frame: Frame = "projector") -> np.ndarray:
    """2x2 matrix [[kappa^-1, c], [c*, w_0]]; positive semi-definite on separable states."""
    if not u.is_unitary():
        raise NonUnitaryError("U is not unitary within tolerance")
    scale, seed = _frame_setup(m, frame)
    expect = _full_state_expect(rho, m, scale)
    u = as_bipartite(u, m.dA, m.dA)
    a = expect(identity((m.dA, m.dA))).real
    c = expect(seed @ u)
    w0 = expect(seed).real
    return np.array([[a, c], [np.conj(c), w0]], dtype=complex)


def w_nl_first(
    rho: DensityMatrix, m: WitnessMap, u: Operator, frame: Frame = "projector",
    tolerances: Optional[Tolerances] = None,
) -> float:
    """Tr(rho W) - |c|^2 / kappa^-1."""
    tol = tolerances or Tolerances()
    mm = moment_matrix(rho, m, u, frame)
    kappa_inv = mm[0, 0].real
    if kappa_inv <= tol.div:
        raise VanishingDenominatorError(kappa_inv, tol.div)
    return float(mm[1, 1].real - abs(mm[0, 1]) ** 2 / kappa_inv)


def iterate(rho: DensityMatrix, m: WitnessMap, cfg: IterationConfig) -> IterationState:
    scale, seed = _frame_setup(m, cfg.frame)
    _check_domain(cfg, m)
    return _run_recurrence(_full_state_expect(rho, m, scale), seed, cfg, m.dA)


def iterate_restricted(
    v: ExpectationVector, d: LocalDecomposition, m: WitnessMap, cfg: IterationConfig, access,
) -> IterationState:
    """Same recurrence as iterate(), computed from measured expectations only.

    Refuses to run without a passing certificate for cfg's U. Every image
    the recurrence touches is checked for membership in V as it is formed.
    """
    _check_certificate(access, cfg)
    _check_domain(cfg, m)
    scale, seed = _frame_setup(m, cfg.frame)
    expect = _restricted_expect(v, d, m, scale, span_basis(d), cfg.tolerances.span)
    return _run_recurrence(expect, seed, cfg, m.dA)


def analytic_quantities(
    rho: DensityMatrix, m: WitnessMap, u: Operator, frame: Frame = "projector",
    tolerances: Optional[Tolerances] = None,
) -> AnalyticQuantities:
    tol = tolerances or Tolerances()
    scale, seed = _frame_setup(m, frame)
    return _quantities(_full_state_expect(rho, m, scale), seed, as_bipartite(u, m.dA, m.dA), m.dA, tol)


def w_infinity(
    rho: DensityMatrix, m: WitnessMap, u: Operator, frame: Frame = "projector",
    tolerances: Optional[Tolerances] = None,
) -> WInfinity:
    """Limit of w_n for a constant involutive U, or the divergence verdict."""
    tol = tolerances or Tolerances()
    _require_involution(u, tol)
    return _w_infinity(analytic_quantities(rho, m, u, frame, tol), tol)


def w_infinity_restricted(
    v: ExpectationVector, d: LocalDecomposition, m: WitnessMap, u: Operator, access,
    frame: Frame = "projector", tolerances: Optional[Tolerances] = None,
) -> WInfinity:
    tol = tolerances or Tolerances()
    _require_involution(u, tol)
    cfg = IterationConfig.constant(u, n_max=0, frame=frame, tolerances=tol)
    _check_certificate(access, cfg)
    scale, seed = _frame_setup(m, frame)
    expect = _restricted_expect(v, d, m, scale, span_basis(d), tol.span)
    q = _quantities(expect, seed, as_bipartite(u, m.dA, m.dA), m.dA, tol)
    return _w_infinity(q, tol)


def series_value(q: AnalyticQuantities, n: int) -> float:
    """Closed-form w_n for a constant involutive U."""
    if n == 0:
        return q.w0
    r = q.ratio ** 2
    partial = sum(r ** m for m in range(n - 1))
    return q.w0 - q.kappa * abs(q.c) ** 2 - q.kappa * abs(q.d) ** 2 * partial


def nonlinear_witness_operator(rho: DensityMatrix, m: WitnessMap, cfg: IterationConfig) -> Operator:
    """W_n = Lambda[Q_n Q_n^dagger] with Q_n built for rho.

    In the projector frame Tr(rho W_n) = w_n.
    """
    state = iterate(rho, m, cfg)
    scale, _ = _frame_setup(m, cfg.frame)
    q = state.q_current
    return apply(m, q @ q.dag()) * scale


def _check_domain(cfg: IterationConfig, m: WitnessMap) -> None:
    if cfg.u.dimension != m.domain_dim:
        raise DimensionMismatchError(
            f"U must act on a {m.dA}x{m.dA} system, got dimension {cfg.u.dimension}"
        )
