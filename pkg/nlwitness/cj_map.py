"""Extended witness map and its adjoint as explicit superoperators.

The map induced by W on H_AB sends X_A to Tr_A(W^{T_A} X_A (x) 1_B); the
extended map acts as that on the second factor (A') of an operator on
H_AA'. Both directions are stored as matrices on column-stacked vectors,
so the adjoint is a conjugate transpose.
"""
from typing import Dict

import numpy as np
from pydantic import BaseModel, ConfigDict

from nlwitness.models import DimensionMismatchError, NonHermitianError
from nlwitness.operators import (
    TOL_HERMITIAN,
    Operator,
    as_bipartite,
    identity,
    max_entangled_projector,
)


def vec(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d, order="F")


def _act(x: np.ndarray, w: np.ndarray, dA: int, dB: int) -> np.ndarray:
    """(1_A (x) Lambda_W)(x) for x on H_AA', returning an operator on H_AB."""
    x4 = x.reshape(dA, dA, dA, dA)
    w4 = w.reshape(dA, dB, dA, dB)
    out = np.einsum("xpyq,pbqc->xbyc", x4, w4)
    return out.reshape(dA * dB, dA * dB)


class WitnessMap(BaseModel):
    """Superoperator of the extended map for a fixed witness."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    witness: Operator
    dA: int
    dB: int
    forward: np.ndarray
    adjoint: np.ndarray
    cache: Dict[str, Operator] = {}

    @property
    def domain_dim(self) -> int:
        return self.dA * self.dA

    @property
    def codomain_dim(self) -> int:
        return self.dA * self.dB

    def image_identity(self) -> Operator:
        return self.cache["identity"]

    def image_projector(self) -> Operator:
        return self.cache["projector"]

    def scaled(self, s: float) -> "WitnessMap":
        """The map s * Lambda, which is the map of the witness s * W."""
        cache = {k: v * s for k, v in self.cache.items()}
        return self.model_copy(update={
            "witness": self.witness * s,
            "forward": self.forward * s,
            "adjoint": self.adjoint * s,
            "cache": cache,
        })


def map_from_witness(w: Operator, dA: int, dB: int) -> WitnessMap:
    """Build the superoperator of the extended map induced by w."""
    w = as_bipartite(w, dA, dB)
    if not w.is_hermitian(TOL_HERMITIAN):
        raise NonHermitianError("witness operator is not Hermitian")

    n_in = dA * dA
    n_out = dA * dB
    forward = np.zeros((n_out * n_out, n_in * n_in), dtype=complex)
    for j in range(n_in * n_in):
        e = np.zeros(n_in * n_in, dtype=complex)
        e[j] = 1.0
        forward[:, j] = vec(_act(unvec(e, n_in), w.data, dA, dB))
    forward.flags.writeable = False
    adjoint = forward.conj().T

    m = WitnessMap(witness=w, dA=dA, dB=dB, forward=forward, adjoint=adjoint)
    cache = {
        "identity": apply(m, identity((dA, dA))),
        "projector": apply(m, max_entangled_projector(dA)),
    }
    return m.model_copy(update={"cache": cache})


def apply(m: WitnessMap, x: Operator) -> Operator:
    x = as_bipartite(x, m.dA, m.dA)
    out = unvec(m.forward @ vec(x.data), m.codomain_dim)
    return Operator(data=out, dims=(m.dA, m.dB))


def apply_adjoint(m: WitnessMap, rho: Operator) -> Operator:
    rho = as_bipartite(rho, m.dA, m.dB)
    out = unvec(m.adjoint @ vec(rho.data), m.domain_dim)
    return Operator(data=out, dims=(m.dA, m.dA))
