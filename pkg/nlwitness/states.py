"""State families evaluated by the witnesses.

Every family honours StateSpec.p as a white-noise admixture, so
make(StateSpec(family="smolin", p=0.5)) is (1 - p) rho_S + p 1/16.
"""
from functools import reduce
from typing import List, Union

import numpy as np

from nlwitness.models import InvalidStateError, StateSpec
from nlwitness.operators import DensityMatrix, Operator, haar_ket, ket_projector, pauli_string
from nlwitness.registry import get_factories, register_family

_SQ2 = np.sqrt(0.5)

BELL_KETS = {
    "phi+": np.array([1, 0, 0, 1]) * _SQ2,
    "phi-": np.array([1, 0, 0, -1]) * _SQ2,
    "psi+": np.array([0, 1, 1, 0]) * _SQ2,
    "psi-": np.array([0, 1, -1, 0]) * _SQ2,
}

QUBIT_KETS = {
    "0": np.array([1, 0]),
    "1": np.array([0, 1]),
    "+": np.array([1, 1]) * _SQ2,
    "-": np.array([1, -1]) * _SQ2,
    "+i": np.array([1, 1j]) * _SQ2,
    "-i": np.array([1, -1j]) * _SQ2,
}


def white_noise_mix(rho: DensityMatrix, p: float) -> DensityMatrix:
    """(1 - p) rho + p 1/D."""
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError(f"noise parameter p must lie in [0, 1], got {p}")
    if p == 0.0:
        return rho
    d = rho.dimension
    mixed = (1.0 - p) * rho.data + p * np.eye(d) / d
    return DensityMatrix.from_array(mixed, rho.dims)


def _pure(ket: np.ndarray, dims) -> DensityMatrix:
    return DensityMatrix(op=ket_projector(ket, dims))


# --- Families ---

def make_bell(spec: StateSpec) -> DensityMatrix:
    return _pure(BELL_KETS[spec.which], (2, 2))


def make_phi_family(spec: StateSpec) -> DensityMatrix:
    """weight |phi><phi| + (1 - weight) 1/4 with |phi> = (|01> - e^{i phi}|10>)/sqrt2.

    The default weight 2/3 gives the 1/12 white-noise floor.
    """
    if not 0.0 <= spec.weight <= 1.0:
        raise InvalidStateError(f"weight must lie in [0, 1], got {spec.weight}")
    ket = np.array([0, 1, -np.exp(1j * spec.phi), 0]) * _SQ2
    data = spec.weight * np.outer(ket, ket.conj()) + (1.0 - spec.weight) * np.eye(4) / 4
    return DensityMatrix.from_array(data, (2, 2))


def smolin_state() -> DensityMatrix:
    """(1/4) sum_k P_k (x) P_k over the four Bell projectors, on four qubits."""
    data = sum(
        np.kron(np.outer(k, k.conj()), np.outer(k, k.conj())) for k in BELL_KETS.values()
    ) / 4
    return DensityMatrix.from_array(data, (2, 2, 2, 2))


def smolin_pauli_form() -> Operator:
    """(1 + XXXX + YYYY + ZZZZ)/16, the Pauli form of the same state."""
    data = sum(pauli_string(s * 4).data for s in "IXYZ") / 16
    return Operator(data=data, dims=(2, 2, 2, 2))


def make_smolin(spec: StateSpec) -> DensityMatrix:
    return smolin_state()


def _parse_ket(item: Union[str, list]) -> np.ndarray:
    if isinstance(item, str):
        if item not in QUBIT_KETS:
            raise InvalidStateError(
                f"unknown ket label '{item}', expected one of {sorted(QUBIT_KETS)}"
            )
        return QUBIT_KETS[item].astype(complex)
    ket = np.array([complex(re, im) for re, im in item], dtype=complex)
    norm = np.linalg.norm(ket)
    if ket.size < 2 or norm == 0 or not np.isfinite(norm):
        raise InvalidStateError("explicit kets need at least two finite, not all-zero amplitudes")
    return ket / norm


def make_product(spec: StateSpec) -> DensityMatrix:
    if not spec.kets:
        raise InvalidStateError("product state needs at least one ket")
    kets = [_parse_ket(k) for k in spec.kets]
    dims = tuple(len(k) for k in kets)
    return _pure(reduce(np.kron, kets), dims)


def random_separable(dims, size: int, rng: np.random.Generator) -> DensityMatrix:
    """Convex mixture of `size` Haar-random pure product states."""
    weights = rng.dirichlet(np.ones(size))
    total = int(np.prod(dims))
    data = np.zeros((total, total), dtype=complex)
    for w in weights:
        ket = reduce(np.kron, [haar_ket(d, rng) for d in dims])
        data += w * np.outer(ket, ket.conj())
    return DensityMatrix.from_array(data, tuple(dims))


def random_state(dims, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank Ginibre state G G^dagger / Tr."""
    total = int(np.prod(dims))
    g = rng.normal(size=(total, total)) + 1j * rng.normal(size=(total, total))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix.from_array(rho / np.trace(rho).real, tuple(dims))


def make_random_separable(spec: StateSpec) -> DensityMatrix:
    return random_separable(spec.dims, spec.mixture_size, np.random.default_rng(spec.seed))


def make_random_state(spec: StateSpec) -> DensityMatrix:
    return random_state(spec.dims, np.random.default_rng(spec.seed))


register_family(
    {"type": "bell", "label": "Bell state",
     "params": [{"name": "which", "type": "str", "default": "phi+"}]},
    make_bell,
)
register_family(
    {"type": "phi_family", "label": "Noisy |phi> family",
     "params": [{"name": "phi", "default": 0.0}, {"name": "weight", "default": 2.0 / 3.0}]},
    make_phi_family,
)
register_family(
    {"type": "smolin", "label": "Smolin state", "params": [{"name": "p", "default": 0.0}]},
    make_smolin,
)
register_family(
    {"type": "product", "label": "Product of local kets",
     "params": [{"name": "kets", "type": "list", "default": []}]},
    make_product,
)
register_family(
    {"type": "random_separable", "label": "Random separable mixture",
     "params": [{"name": "seed", "type": "int", "default": 0},
                {"name": "mixture_size", "type": "int", "default": 4},
                {"name": "dims", "type": "list", "default": [2, 2]}]},
    make_random_separable,
)
register_family(
    {"type": "random_state", "label": "Random mixed state",
     "params": [{"name": "seed", "type": "int", "default": 0},
                {"name": "dims", "type": "list", "default": [2, 2]}]},
    make_random_state,
)


def make(spec: StateSpec) -> DensityMatrix:
    """Build the state a spec describes, white noise included."""
    factories = get_factories()
    if spec.family not in factories:
        raise InvalidStateError(f"unknown state family '{spec.family}'")
    return white_noise_mix(factories[spec.family](spec), spec.p)


def families() -> List[str]:
    return sorted(get_factories())
