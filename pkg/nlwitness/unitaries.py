"""Named unitaries on H_AA' and parsing of unitary specs."""
from typing import List, Union

from nlwitness.models import ConfigError, NLWitnessError, NonUnitaryError
from nlwitness.operators import Operator, identity, pauli_string, swap_operator
from nlwitness.registry import get_unitary_factories, register_unitary
from nlwitness.witness import matrix_from_pairs

UnitarySpec = Union[str, List[list]]


def _swap(d: int) -> Operator:
    return swap_operator(d)


def _identity(d: int) -> Operator:
    return identity((d, d))


register_unitary(
    {
        "type": "swap_AA'",
        "label": "A <-> A' swap",
        "description": "Exchanges the two copies of H_A; equals (1 + sum_a s_a (x) s_a)/2 for qubits.",
    },
    _swap,
)
register_unitary({"type": "identity", "label": "Identity"}, _identity)


def resolve_unitary(spec: UnitarySpec, dA: int) -> Operator:
    """Preset name, Pauli string or explicit matrix to an operator on a dA x dA system."""
    try:
        if isinstance(spec, str):
            factories = get_unitary_factories()
            if spec in factories:
                u = factories[spec](dA)
            elif spec and not set(spec) - set("IXYZ"):
                u = pauli_string(spec)
            else:
                raise ConfigError("unitary", f"unknown preset or Pauli string '{spec}'")
        else:
            u = Operator.from_array(matrix_from_pairs(spec))
    except ConfigError:
        raise
    except NLWitnessError as exc:
        raise ConfigError("unitary", str(exc)) from exc

    if u.dimension != dA * dA:
        raise ConfigError("unitary", f"acts on dimension {u.dimension}, expected {dA * dA}")
    if not u.is_unitary():
        raise NonUnitaryError("configured U is not unitary")
    return u.with_dims((dA, dA))

