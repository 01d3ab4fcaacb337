"""Dense complex operators with subsystem structure.

Every operator carries its ordered subsystem dimensions. Partial trace,
partial transpose and subsystem permutation are index reshuffles on the
(dims + dims) tensor view, so they are exact.
"""
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from nlwitness.models import (
    DimensionMismatchError,
    InvalidOperatorError,
    InvalidStateError,
    NonHermitianError,
)

TOL_HERMITIAN = 1e-9
TOL_PSD = 1e-9

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class Operator(BaseModel):
    """Square complex matrix on a tensor product of subsystems."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray
    dims: Tuple[int, ...]

    @field_validator("data", mode="before")
    @classmethod
    def _as_readonly_complex(cls, v):
        arr = np.array(v, dtype=complex, copy=True)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_shape(self):
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise InvalidOperatorError(f"operator must be square, got shape {self.data.shape}")
        if int(np.prod(self.dims)) != self.data.shape[0]:
            raise DimensionMismatchError(
                f"dims {list(self.dims)} do not multiply to {self.data.shape[0]}"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidOperatorError("operator has NaN or Inf entries")
        return self

    @classmethod
    def from_array(cls, data, dims: Optional[Sequence[int]] = None) -> "Operator":
        arr = np.asarray(data, dtype=complex)
        return cls(data=arr, dims=tuple(dims) if dims is not None else (arr.shape[0],))

    @property
    def dimension(self) -> int:
        return self.data.shape[0]

    def with_dims(self, dims: Sequence[int]) -> "Operator":
        """Same matrix, different subsystem grouping."""
        return Operator(data=self.data, dims=tuple(dims))

    def dag(self) -> "Operator":
        return Operator(data=self.data.conj().T, dims=self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hs_inner(self, other: "Operator") -> complex:
        """Hilbert-Schmidt inner product Tr(self^dagger other)."""
        _require_same_size(self, other)
        return complex(np.vdot(self.data, other.data))

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def is_hermitian(self, tol: float = TOL_HERMITIAN) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T), initial=0.0) <= tol)

    def is_unitary(self, tol: float = TOL_HERMITIAN) -> bool:
        eye = np.eye(self.dimension)
        return bool(np.max(np.abs(self.data @ self.data.conj().T - eye)) <= tol)

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_size(self, other)
        return Operator(data=self.data @ other.data, dims=self.dims)

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_size(self, other)
        return Operator(data=self.data + other.data, dims=self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_size(self, other)
        return Operator(data=self.data - other.data, dims=self.dims)

    def __mul__(self, scalar: Union[int, float, complex]) -> "Operator":
        return Operator(data=self.data * scalar, dims=self.dims)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(data=-self.data, dims=self.dims)


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace, positive semi-definite operator."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    op: Operator

    @model_validator(mode="after")
    def _check_state(self):
        if not self.op.is_hermitian(TOL_HERMITIAN):
            raise InvalidStateError("density matrix is not Hermitian")
        tr = self.op.trace()
        if abs(tr - 1.0) > TOL_HERMITIAN:
            raise InvalidStateError(f"density matrix has trace {tr.real:.6g}, expected 1")
        lowest = float(np.linalg.eigvalsh(_hermitian_part(self.op.data))[0])
        if lowest < -TOL_PSD:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lowest:.3e}")
        return self

    @classmethod
    def from_array(cls, data, dims: Optional[Sequence[int]] = None) -> "DensityMatrix":
        return cls(op=Operator.from_array(data, dims))

    @property
    def data(self) -> np.ndarray:
        return self.op.data

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.op.dims

    @property
    def dimension(self) -> int:
        return self.op.dimension

    def with_dims(self, dims: Sequence[int]) -> "DensityMatrix":
        return DensityMatrix(op=self.op.with_dims(dims))


# --- Helpers ---

def _require_same_size(a: Operator, b: Operator) -> None:
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"operator sizes differ: {a.dimension} vs {b.dimension}"
        )


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _check_subsystems(dims: Tuple[int, ...], subsystems: Iterable[int]) -> List[int]:
    chosen = sorted(set(int(s) for s in subsystems))
    for s in chosen:
        if s < 0 or s >= len(dims):
            raise DimensionMismatchError(
                f"subsystem index {s} out of range for dims {list(dims)}"
            )
    return chosen


def as_bipartite(x: Operator, d1: int, d2: int) -> Operator:
    """Regroup x as a two-party operator with dims (d1, d2)."""
    if x.dimension != d1 * d2:
        raise DimensionMismatchError(
            f"expected an operator on a {d1}x{d2} system, got dimension {x.dimension}"
        )
    return x if x.dims == (d1, d2) else x.with_dims((d1, d2))


# --- Construction ---

def identity(dims: Sequence[int]) -> Operator:
    return Operator(data=np.eye(int(np.prod(dims))), dims=tuple(dims))


def tensor(a: Operator, b: Operator) -> Operator:
    return Operator(data=np.kron(a.data, b.data), dims=a.dims + b.dims)


def tensor_all(ops: Sequence[Operator]) -> Operator:
    return reduce(tensor, ops)


def pauli_string(labels: Union[str, Sequence[str]]) -> Operator:
    """Tensor product of single-qubit Paulis, e.g. "XZ" or ["X", "Z"]."""
    labels = list(labels)
    if not labels:
        raise InvalidOperatorError("pauli string must have at least one label")
    factors = []
    for label in labels:
        if label not in _PAULI:
            raise InvalidOperatorError(f"unknown Pauli label '{label}'")
        factors.append(Operator(data=_PAULI[label], dims=(2,)))
    return tensor_all(factors)


def ket_projector(ket: np.ndarray, dims: Optional[Sequence[int]] = None) -> Operator:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return Operator.from_array(np.outer(ket, ket.conj()), dims)


def max_entangled_projector(d: int) -> Operator:
    """Unnormalized sum_ij |ii><jj| on a d x d system (trace d, P^2 = d P)."""
    if d < 2:
        raise InvalidOperatorError(f"dimension must be at least 2, got {d}")
    psi = np.eye(d, dtype=complex).reshape(d * d)
    return Operator(data=np.outer(psi, psi), dims=(d, d))


def swap_operator(d: int) -> Operator:
    """SWAP|ij> = |ji> on a d x d system."""
    eye = np.eye(d)
    swap = np.einsum("kj,li->klij", eye, eye).reshape(d * d, d * d)
    return Operator(data=swap, dims=(d, d))


def haar_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(d: int, rng: np.random.Generator) -> Operator:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return Operator(data=q * phases, dims=(d,))


# --- Subsystem operations ---

def partial_trace(x: Operator, subsystems: Iterable[int]) -> Operator:
    """Trace out the listed subsystems. Tracing everything leaves a 1x1 operator."""
    chosen = _check_subsystems(x.dims, subsystems)
    n = len(x.dims)
    t = x.data.reshape(x.dims + x.dims)
    for s in reversed(chosen):
        half = t.ndim // 2
        t = np.trace(t, axis1=s, axis2=s + half)
    kept = tuple(x.dims[i] for i in range(n) if i not in chosen) or (1,)
    size = int(np.prod(kept))
    return Operator(data=t.reshape(size, size), dims=kept)


def partial_transpose(x: Operator, subsystems: Iterable[int]) -> Operator:
    """Transpose the listed subsystems in the computational basis."""
    chosen = _check_subsystems(x.dims, subsystems)
    n = len(x.dims)
    perm = list(range(2 * n))
    for s in chosen:
        perm[s], perm[s + n] = perm[s + n], perm[s]
    t = x.data.reshape(x.dims + x.dims).transpose(perm)
    return Operator(data=t.reshape(x.dimension, x.dimension), dims=x.dims)


def permute_subsystems(x: Operator, order: Sequence[int]) -> Operator:
    """Reorder tensor factors: factor i of the result is factor order[i] of x."""
    n = len(x.dims)
    if sorted(order) != list(range(n)):
        raise DimensionMismatchError(f"{list(order)} is not a permutation of {n} subsystems")
    axes = list(order) + [n + o for o in order]
    t = x.data.reshape(x.dims + x.dims).transpose(axes)
    new_dims = tuple(x.dims[o] for o in order)
    return Operator(data=t.reshape(x.dimension, x.dimension), dims=new_dims)


# --- Spectral tests ---

def min_eigenvalue(x: Operator, tol: float = TOL_HERMITIAN) -> float:
    """Smallest eigenvalue of the Hermitian part; rejects clearly non-Hermitian input."""
    if not x.is_hermitian(tol):
        raise NonHermitianError(
            f"operator deviates from Hermitian by "
            f"{np.max(np.abs(x.data - x.data.conj().T)):.3e} (tol {tol:.1e})"
        )
    return float(np.linalg.eigvalsh(_hermitian_part(x.data))[0])


def is_psd(x: Operator, tol: float = TOL_PSD) -> bool:
    return min_eigenvalue(x) >= -tol
