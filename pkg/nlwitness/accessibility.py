"""Numerical accessibility certificates.

An operator X on H_AA' is usable from measured data when Lambda[X] lies in
V = span{A_i (x) B_i}; the set of such X is V'. Certificates record which
of the needed operators pass that test and by how much the others miss.
"""
from typing import Dict, List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import null_space

from nlwitness.cj_map import WitnessMap, apply
from nlwitness.logger import logger
from nlwitness.models import DimensionMismatchError, NonUnitaryError, NotInvolutoryError
from nlwitness.nonlinear import is_involution, unitary_digest
from nlwitness.operators import Operator, as_bipartite, identity, max_entangled_projector
from nlwitness.witness import TOL_SPAN, LocalDecomposition, SpanBasis, in_span, span_basis

Verdict = Literal["sufficient-accessible", "analytic-accessible", "not-certified"]

_IMAGES = ("identity", "U", "PU", "P")


class AccessibilityCertificate(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    v_dim: int
    v_prime_basis: np.ndarray
    checks: Dict[str, object]
    residuals: Dict[str, float]
    verdict: Verdict
    unitary_digest: str
    tol: float = TOL_SPAN

    @property
    def v_prime_dim(self) -> int:
        return int(self.v_prime_basis.shape[1])

    @property
    def worst_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_json(self) -> Dict[str, object]:
        return {
            "verdict": self.verdict,
            "v_dim": self.v_dim,
            "v_prime_dim": self.v_prime_dim,
            "checks": self.checks,
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
        }


def preimage_subspace(m: WitnessMap, v_basis: SpanBasis, tol: float = TOL_SPAN) -> np.ndarray:
    """Orthonormal basis (column-stacked operators) of the largest V' with Lambda[V'] in V."""
    if v_basis.dimension != m.codomain_dim:
        raise DimensionMismatchError(
            f"span lives on dimension {v_basis.dimension}, map outputs {m.codomain_dim}"
        )
    b = v_basis.basis
    leak = m.forward - b @ (b.conj().T @ m.forward)
    return null_space(leak, rcond=tol)


def _basis_operators(columns: np.ndarray, d: int, dims) -> List[Operator]:
    return [Operator(data=columns[:, j].reshape(d, d, order="F"), dims=dims) for j in range(columns.shape[1])]


def _residual(m: WitnessMap, basis: SpanBasis, x: Operator) -> float:
    return in_span(apply(m, x), basis, tol=np.inf).residual


def _evaluate(d: LocalDecomposition, m: WitnessMap, u: Operator, tol: float):
    if u.dimension != m.domain_dim:
        raise DimensionMismatchError(
            f"U must act on a {m.dA}x{m.dA} system, got dimension {u.dimension}"
        )
    if not u.is_unitary():
        raise NonUnitaryError("U is not unitary within tolerance")
    u = as_bipartite(u, m.dA, m.dA)
    basis = span_basis(d)
    v_prime = preimage_subspace(m, basis, tol)
    p = max_entangled_projector(m.dA)
    one = identity((m.dA, m.dA))

    residuals: Dict[str, float] = {
        "identity_in_V'": _residual(m, basis, one),
        "U_in_V'": _residual(m, basis, u),
    }

    worst = 0.0
    elements = _basis_operators(v_prime, m.domain_dim, (m.dA, m.dA))
    for a in elements:
        for b in elements:
            worst = max(worst, _residual(m, basis, a @ b))
    residuals["algebra_closed"] = worst

    for name, x in zip(_IMAGES, (one, u, p @ u, p)):
        residuals[f"image_{name}"] = _residual(m, basis, x)

    checks = {
        "identity_in_V'": residuals["identity_in_V'"] < tol,
        "U_in_V'": residuals["U_in_V'"] < tol,
        "algebra_closed": residuals["algebra_closed"] < tol,
        "images_in_V": {name: residuals[f"image_{name}"] < tol for name in _IMAGES},
    }
    return basis, v_prime, checks, residuals


def check_sufficient(
    d: LocalDecomposition, m: WitnessMap, u: Operator, tol: float = TOL_SPAN,
) -> AccessibilityCertificate:
    """V' is a unital algebra containing U: every iterate stays accessible."""
    basis, v_prime, checks, residuals = _evaluate(d, m, u, tol)
    ok = checks["identity_in_V'"] and checks["U_in_V'"] and checks["algebra_closed"]
    verdict = "sufficient-accessible" if ok else "not-certified"
    logger.info(f"sufficient check: dim V={basis.rank}, dim V'={v_prime.shape[1]}, verdict={verdict}")
    return AccessibilityCertificate(
        v_dim=basis.rank, v_prime_basis=v_prime, checks=checks, residuals=residuals,
        verdict=verdict, unitary_digest=unitary_digest(u), tol=tol,
    )


def check_analytic(
    d: LocalDecomposition, m: WitnessMap, u: Operator, tol: float = TOL_SPAN,
) -> AccessibilityCertificate:
    """Images of 1, U and P U lie in V: kappa, k and c are measurable."""
    if not is_involution(u):
        raise NotInvolutoryError("the analytic check needs U^2 = 1")
    basis, v_prime, checks, residuals = _evaluate(d, m, u, tol)
    images = checks["images_in_V"]
    ok = images["identity"] and images["U"] and images["PU"]
    verdict = "analytic-accessible" if ok else "not-certified"
    if not ok:
        failing = [k for k in ("identity", "U", "PU") if not images[k]]
        logger.warn(f"images outside V: {', '.join(failing)}")
    logger.info(f"analytic check: verdict={verdict}")
    return AccessibilityCertificate(
        v_dim=basis.rank, v_prime_basis=v_prime, checks=checks, residuals=residuals,
        verdict=verdict, unitary_digest=unitary_digest(u), tol=tol,
    )


def certify(
    d: LocalDecomposition, m: WitnessMap, u: Operator, tol: float = TOL_SPAN,
) -> AccessibilityCertificate:
    """Strongest verdict available: sufficient, else analytic for involutive U."""
    cert = check_sufficient(d, m, u, tol)
    if cert.verdict == "not-certified" and is_involution(u):
        return check_analytic(d, m, u, tol)
    return cert
