"""Linear witnesses given as locally measured decompositions.

A decomposition W = sum_i c_i A_i (x) B_i fixes the measured observables
T_i = A_i (x) B_i. Their span V is the set of operators whose expectation
can be read off the measured data; membership in V is tested by
Hilbert-Schmidt least squares against an orthonormal basis of V.
"""
import itertools
import json
import os
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from nlwitness.cj_map import vec
from nlwitness.models import (
    ConfigError,
    DecompositionFile,
    DimensionMismatchError,
    InvalidOperatorError,
    NLWitnessError,
    NonHermitianError,
)
from nlwitness.operators import (
    TOL_HERMITIAN,
    DensityMatrix,
    Operator,
    as_bipartite,
    min_eigenvalue,
    partial_transpose,
    pauli_string,
    tensor,
)

TOL_SPAN = 1e-9


class Term(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coeff: float
    A: Operator
    B: Operator

    @property
    def observable(self) -> Operator:
        return tensor(self.A, self.B)

    @property
    def norm_bound(self) -> float:
        return float(np.linalg.norm(self.A.data, 2) * np.linalg.norm(self.B.data, 2))


class LocalDecomposition(BaseModel):
    """W = sum_i c_i A_i (x) B_i with Hermitian local factors."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    terms: List[Term]
    dA: int
    dB: int

    @model_validator(mode="after")
    def _check_terms(self):
        if not self.terms:
            raise InvalidOperatorError("a decomposition needs at least one term")
        for i, t in enumerate(self.terms):
            if t.A.dimension != self.dA or t.B.dimension != self.dB:
                raise DimensionMismatchError(
                    f"term {i} acts on {t.A.dimension}x{t.B.dimension}, "
                    f"expected {self.dA}x{self.dB}"
                )
            if not (t.A.is_hermitian(TOL_HERMITIAN) and t.B.is_hermitian(TOL_HERMITIAN)):
                raise NonHermitianError(f"term {i} has a non-Hermitian local factor")
        return self

    @property
    def size(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    def observables(self) -> List[Operator]:
        return [t.observable.with_dims((self.dA, self.dB)) for t in self.terms]


class ExpectationVector(BaseModel):
    """Measured point M(rho) in R^N, one value per decomposition term."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    provenance: Literal["exact", "simulated"] = "exact"
    bounds: Optional[np.ndarray] = None

    @field_validator("values", mode="before")
    @classmethod
    def _as_real(cls, v):
        arr = np.array(v, dtype=float, copy=True).reshape(-1)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _within_bounds(self):
        if self.bounds is not None:
            if len(self.bounds) != len(self.values):
                raise DimensionMismatchError("bounds and values differ in length")
            over = np.abs(self.values) - np.asarray(self.bounds)
            if np.any(over > 1e-9):
                i = int(np.argmax(over))
                raise InvalidOperatorError(
                    f"value {self.values[i]:.6g} of term {i} exceeds its norm bound {self.bounds[i]:.6g}"
                )
        return self

    def __len__(self) -> int:
        return len(self.values)


class SpanBasis(BaseModel):
    """Orthonormal basis of V plus the map from basis coordinates to term weights."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    basis: np.ndarray         # (D^2, r) orthonormal columns, column-stacked operators
    to_terms: np.ndarray      # (N, r): minimum-norm term weights per basis vector
    dims: tuple

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims))

    def operators(self) -> List[Operator]:
        d = self.dimension
        return [
            Operator(data=self.basis[:, j].reshape(d, d, order="F"), dims=self.dims)
            for j in range(self.rank)
        ]


class SpanMembership(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    inside: bool
    residual: float
    coefficients: Optional[np.ndarray] = None
    term_coefficients: Optional[np.ndarray] = None


# --- Construction ---

def assemble(d: LocalDecomposition) -> Operator:
    data = sum(t.coeff * np.kron(t.A.data, t.B.data) for t in d.terms)
    return Operator(data=data, dims=(d.dA, d.dB))


def expectation_vector(rho: DensityMatrix, d: LocalDecomposition) -> ExpectationVector:
    if rho.dimension != d.dA * d.dB:
        raise DimensionMismatchError(
            f"state dimension {rho.dimension} does not match {d.dA}x{d.dB}"
        )
    values = [np.vdot(obs.data, rho.data).real for obs in d.observables()]
    bounds = np.array([t.norm_bound for t in d.terms])
    return ExpectationVector(values=values, provenance="exact", bounds=bounds)


def linear_witness_value(v: ExpectationVector, d: LocalDecomposition) -> float:
    if len(v) != d.size:
        raise DimensionMismatchError(
            f"expectation vector has {len(v)} entries, decomposition has {d.size} terms"
        )
    return float(np.dot(d.coefficients, v.values))


def span_basis(d: LocalDecomposition, tol: float = 1e-10) -> SpanBasis:
    """Orthonormal basis of span{A_i (x) B_i} from a thin SVD of the term matrix."""
    t = np.column_stack([vec(obs.data) for obs in d.observables()])
    u, s, vh = la.svd(t, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0]))) if s.size else 0
    basis = u[:, :rank]
    to_terms = vh[:rank].conj().T / s[:rank]
    return SpanBasis(basis=basis, to_terms=to_terms, dims=(d.dA, d.dB))


def in_span(x: Operator, basis: SpanBasis, tol: float = TOL_SPAN) -> SpanMembership:
    """Project x onto V. Not being in V is a result, not an error."""
    if x.dimension != basis.dimension:
        raise DimensionMismatchError(
            f"operator dimension {x.dimension} does not match span dimension {basis.dimension}"
        )
    y = vec(x.data)
    coeffs = basis.basis.conj().T @ y
    residual = float(np.linalg.norm(y - basis.basis @ coeffs))
    if residual >= tol:
        return SpanMembership(inside=False, residual=residual)
    return SpanMembership(
        inside=True,
        residual=residual,
        coefficients=coeffs,
        term_coefficients=basis.to_terms @ coeffs,
    )


# --- Verification set ---

def reweighted(d: LocalDecomposition, alpha: Sequence[float]) -> LocalDecomposition:
    """Same observables, new weights: another operator over the same measured data."""
    alpha = list(alpha)
    if len(alpha) != d.size:
        raise DimensionMismatchError(f"expected {d.size} weights, got {len(alpha)}")
    terms = [t.model_copy(update={"coeff": float(a)}) for t, a in zip(d.terms, alpha)]
    return LocalDecomposition(terms=terms, dA=d.dA, dB=d.dB)


def pauli_decomposition(w: Operator, n_a: int, n_b: int, tol: float = 1e-12) -> LocalDecomposition:
    """Expand a multi-qubit operator over local Pauli strings, dropping coefficients below tol."""
    n = n_a + n_b
    if w.dimension != 2 ** n:
        raise DimensionMismatchError(f"expected a {n}-qubit operator, got dimension {w.dimension}")
    if not w.is_hermitian(TOL_HERMITIAN):
        raise NonHermitianError("only Hermitian operators have real Pauli coefficients")
    terms = []
    for labels in itertools.product("IXYZ", repeat=n):
        p = pauli_string(labels)
        c = np.vdot(p.data, w.data).real / 2 ** n
        if abs(c) > tol:
            terms.append(Term(
                coeff=c,
                A=pauli_string(labels[:n_a]),
                B=pauli_string(labels[n_a:]),
            ))
    if not terms:
        raise InvalidOperatorError("operator has no Pauli component above tolerance")
    return LocalDecomposition(terms=terms, dA=2 ** n_a, dB=2 ** n_b)


def decomposable_witness(p: Operator, dA: int, dB: int) -> Operator:
    """W = P^{T_A} for a positive semi-definite P."""
    p = as_bipartite(p, dA, dB)
    lowest = min_eigenvalue(p)
    if lowest < -TOL_HERMITIAN:
        raise InvalidOperatorError(f"P must be positive semi-definite, min eigenvalue {lowest:.3e}")
    return partial_transpose(p, [0])


# --- File format ---

def matrix_from_pairs(rows: list) -> np.ndarray:
    """Row-major [[ [re, im], ... ], ...] to a complex array."""
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise InvalidOperatorError("matrix rows have different lengths")
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _parse_observable(spec: Union[str, list], expected: int, where: str) -> Operator:
    try:
        if isinstance(spec, str):
            op = pauli_string(spec)
        else:
            op = Operator.from_array(matrix_from_pairs(spec))
    except NLWitnessError as exc:
        raise ConfigError(where, str(exc)) from exc
    if op.dimension != expected:
        raise ConfigError(where, f"acts on dimension {op.dimension}, expected {expected}")
    return op


def decomposition_from_dict(raw: Dict[str, Any]) -> LocalDecomposition:
    spec = DecompositionFile.model_validate(raw)
    terms = []
    for i, t in enumerate(spec.terms):
        a = _parse_observable(t.A, spec.dA, f"terms[{i}].A")
        b = _parse_observable(t.B, spec.dB, f"terms[{i}].B")
        terms.append(Term(coeff=t.coeff, A=a, B=b))
    try:
        return LocalDecomposition(terms=terms, dA=spec.dA, dB=spec.dB)
    except NLWitnessError as exc:
        raise ConfigError("terms", str(exc)) from exc


def load_decomposition(path: str) -> LocalDecomposition:
    """Load a witness decomposition JSON file."""
    if not os.path.isfile(path):
        raise ConfigError("witness", f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("witness", f"{path} is not valid JSON: {exc}") from exc
    return decomposition_from_dict(raw)
