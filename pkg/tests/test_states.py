"""Tests for state families."""
import sys
import os

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from nlwitness.models import InvalidStateError, StateSpec
from nlwitness.operators import min_eigenvalue, partial_transpose, permute_subsystems, swap_operator
from nlwitness.states import (
    BELL_KETS,
    families,
    make,
    random_separable,
    random_state,
    smolin_pauli_form,
    smolin_state,
    white_noise_mix,
)


# --- Tests ---

def test_all_families_registered():
    assert families() == sorted(
        ["bell", "phi_family", "smolin", "product", "random_separable", "random_state"]
    )


def test_bell_states():
    for which, ket in BELL_KETS.items():
        rho = make(StateSpec(family="bell", which=which))
        assert np.allclose(rho.data, np.outer(ket, ket.conj()))
        assert rho.dims == (2, 2)


def test_phi_family_linear_value():
    w0 = swap_operator(2).data / 2
    for phi in np.linspace(0, 2 * np.pi, 7):
        rho = make(StateSpec(family="phi_family", phi=phi))
        value = np.vdot(w0, rho.data).real
        assert value == pytest.approx(1 / 12 - np.cos(phi) / 3, abs=1e-12)


def test_phi_family_weight_range():
    with pytest.raises(InvalidStateError):
        make(StateSpec(family="phi_family", weight=1.5))


def test_smolin_forms_agree():
    rho = smolin_state()
    assert rho.dims == (2, 2, 2, 2)
    assert np.allclose(rho.data, smolin_pauli_form().data)


def test_smolin_partial_transposes():
    rho = smolin_state()
    for pair in ([0, 1], [0, 2], [0, 3]):
        assert min_eigenvalue(partial_transpose(rho.op, pair)) >= -1e-12
    assert min_eigenvalue(partial_transpose(rho.op, [0])) == pytest.approx(-0.125)


def test_smolin_symmetric_under_pair_exchange():
    for p in (0.0, 0.4):
        s = make(StateSpec(family="smolin", p=p))
        swapped = permute_subsystems(s.op, [1, 0, 3, 2])
        assert swapped.dims == (2, 2, 2, 2)
        assert np.allclose(swapped.data, s.data, atol=1e-12)


def test_white_noise():
    rho = make(StateSpec(family="smolin", p=1.0))
    assert np.allclose(rho.data, np.eye(16) / 16)
    half = make(StateSpec(family="bell", p=0.5))
    assert half.data[0, 0].real == pytest.approx(0.25 + 0.125)


def test_white_noise_range():
    with pytest.raises(InvalidStateError):
        white_noise_mix(smolin_state(), 1.5)
    with pytest.raises(ValidationError):
        StateSpec(family="smolin", p=-0.1)


def test_product_state():
    rho = make(StateSpec(family="product", kets=["0", "+"]))
    expected = np.kron([1, 0], [1, 1]) / np.sqrt(2)
    assert np.allclose(rho.data, np.outer(expected, expected))
    assert rho.dims == (2, 2)


def test_product_with_explicit_ket():
    rho = make(StateSpec(family="product", kets=[[[1, 0], [0, 1]], "1"]))
    assert rho.data[1, 1].real == pytest.approx(0.5)
    assert rho.data[3, 3].real == pytest.approx(0.5)


def test_product_state_errors():
    with pytest.raises(InvalidStateError):
        make(StateSpec(family="product", kets=[]))
    with pytest.raises(InvalidStateError):
        make(StateSpec(family="product", kets=["0", "q"]))
    with pytest.raises(InvalidStateError):
        make(StateSpec(family="product", kets=[[[0, 0], [0, 0]]]))


def test_unknown_family_rejected_by_model():
    with pytest.raises(ValidationError):
        StateSpec(family="werner")


def test_random_separable_is_ppt():
    rng = np.random.default_rng(5)
    for _ in range(20):
        rho = random_separable((2, 2), 4, rng)
        assert min_eigenvalue(partial_transpose(rho.op, [0])) >= -1e-12


def test_random_separable_seeded():
    a = make(StateSpec(family="random_separable", seed=9, dims=[2, 3]))
    b = make(StateSpec(family="random_separable", seed=9, dims=[2, 3]))
    assert a.dims == (2, 3)
    assert np.array_equal(a.data, b.data)


def test_random_state_full_rank():
    rho = random_state((2, 2), np.random.default_rng(1))
    eigs = np.linalg.eigvalsh(rho.data)
    assert eigs[0] > 0
    assert np.sum(eigs) == pytest.approx(1.0)
