"""Tests for the nonlinear iteration, its closed form and the restricted path."""
import sys
import os

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from nlwitness.accessibility import certify
from nlwitness.cj_map import map_from_witness
from nlwitness.models import (
    DimensionMismatchError,
    NonUnitaryError,
    NotAccessibleError,
    NotInvolutoryError,
    StateSpec,
    Tolerances,
    VanishingDenominatorError,
)
from nlwitness.nonlinear import (
    IterationConfig,
    analytic_quantities,
    is_involution,
    iterate,
    iterate_restricted,
    moment_matrix,
    nonlinear_witness_operator,
    series_value,
    unitary_digest,
    w_infinity,
    w_infinity_restricted,
    w_nl_first,
)
from nlwitness.operators import Operator, identity, pauli_string, swap_operator
from nlwitness.states import make, random_state
from nlwitness.witness import (
    ExpectationVector,
    assemble,
    decomposition_from_dict,
    expectation_vector,
    load_decomposition,
)

WITNESS_DIR = os.path.join(os.path.dirname(__file__), "..", "presets", "witnesses")
SWAP = swap_operator(2)
ZZ = pauli_string("ZZ")


# --- Helper builders ---

def _w0():
    d = load_decomposition(os.path.join(WITNESS_DIR, "w0.json"))
    return d, map_from_witness(assemble(d), 2, 2)


def _bell():
    return make(StateSpec(family="bell", which="phi+"))


def _cfg(u=SWAP, n=3, **kwargs):
    return IterationConfig.constant(u, n_max=n, **kwargs)


def _phase_gate():
    """diag(1, 1, 1, i): unitary, not an involution."""
    return Operator(data=np.diag([1, 1, 1, 1j]), dims=(2, 2))


# --- Recurrence ---

def test_bell_sequence_projector_frame():
    _, m = _w0()
    state = iterate(_bell(), m, _cfg())
    assert np.allclose(state.w_values, [0.5, 0.25, 0.0, -1.0], atol=1e-10)
    assert np.allclose(state.c_values, [0.25, 0.25, 1.0], atol=1e-10)
    assert state.kappa == pytest.approx(1.0)
    assert abs(state.k_value) == pytest.approx(2.0)
    assert abs(state.c_value) == pytest.approx(0.5)
    assert state.d_value.real == pytest.approx(-0.5)
    assert state.detected
    assert state.w_last == pytest.approx(-1.0)


def test_bell_sequence_choi_frame():
    _, m = _w0()
    state = iterate(_bell(), m, _cfg(frame="choi"))
    assert np.allclose(state.w_values, [0.5, 0.0, -0.5, -2.5], atol=1e-10)
    assert state.kappa == pytest.approx(2.0)
    assert state.frame == "choi"


def test_choi_frame_is_not_a_witness():
    # |y+ y+> is a product state, yet the choi-frame sequence goes negative
    _, m = _w0()
    rho = make(StateSpec(family="product", kets=["+i", "+i"]))
    choi = iterate(rho, m, _cfg(n=2, frame="choi"))
    assert choi.w_values[2] == pytest.approx(-0.5)
    projector = iterate(rho, m, _cfg(n=10))
    assert min(projector.w_values) >= -1e-12


def test_sequence_is_non_increasing():
    _, m = _w0()
    rng = np.random.default_rng(3)
    for _ in range(5):
        state = iterate(random_state((2, 2), rng), m, _cfg(n=6))
        assert all(b <= a + 1e-12 for a, b in zip(state.w_values, state.w_values[1:]))


def test_varying_unitary_sequence():
    _, m = _w0()
    cfg = IterationConfig(u_sequence=[SWAP, ZZ, SWAP, ZZ], n_max=4)
    assert not cfg.is_analytic
    state = iterate(_bell(), m, cfg)
    assert len(state.w_values) == 5
    assert all(b <= a + 1e-12 for a, b in zip(state.w_values, state.w_values[1:]))


def test_zero_steps_returns_linear_value():
    _, m = _w0()
    state = iterate(_bell(), m, _cfg(n=0))
    assert state.w_values == pytest.approx([0.5])
    assert state.c_values == []


def test_matches_closed_form_series():
    _, m = _w0()
    rng = np.random.default_rng(11)
    for _ in range(5):
        rho = random_state((2, 2), rng)
        state = iterate(rho, m, _cfg(n=6))
        q = analytic_quantities(rho, m, SWAP)
        for n, w in enumerate(state.w_values):
            assert w == pytest.approx(series_value(q, n), rel=1e-9, abs=1e-10)


def test_nonlinear_witness_operator_expectation():
    _, m = _w0()
    rho = _bell()
    for n in range(4):
        w_n = nonlinear_witness_operator(rho, m, _cfg(n=n))
        assert w_n.is_hermitian(1e-9)
        value = np.vdot(w_n.data, rho.data).real
        assert value == pytest.approx(iterate(rho, m, _cfg(n=n)).w_last, abs=1e-10)


# --- Moment matrix ---

def test_moment_matrix_projector_frame():
    _, m = _w0()
    mm = moment_matrix(_bell(), m, SWAP)
    assert np.allclose(mm, [[1.0, 0.5], [0.5, 0.5]])
    assert w_nl_first(_bell(), m, SWAP) == pytest.approx(0.25)


def test_moment_matrix_choi_frame():
    _, m = _w0()
    mm = moment_matrix(_bell(), m, SWAP, frame="choi")
    assert np.allclose(mm, [[0.5, 0.5], [0.5, 0.5]])
    assert w_nl_first(_bell(), m, SWAP, frame="choi") == pytest.approx(0.0, abs=1e-12)


def test_moment_matrix_psd_on_separable_states():
    _, m = _w0()
    for seed in range(10):
        rho = make(StateSpec(family="random_separable", seed=seed))
        assert np.linalg.eigvalsh(moment_matrix(rho, m, SWAP))[0] >= -1e-10


def test_moment_determinant_tracks_first_nonlinear_value():
    _, m = _w0()
    rng = np.random.default_rng(11)
    states = [_bell(), make(StateSpec(family="phi_family", phi=np.pi))]
    states += [random_state((2, 2), rng) for _ in range(30)]
    for u in (SWAP, ZZ):
        for rho in states:
            mm = moment_matrix(rho, m, u)
            det = float(np.linalg.det(mm).real)
            scaled = w_nl_first(rho, m, u) * mm[0, 0].real
            assert det == pytest.approx(scaled, abs=1e-12)
            if abs(det) > 1e-9:
                assert np.sign(det) == np.sign(scaled)


def test_moment_matrix_rejects_non_unitary():
    _, m = _w0()
    with pytest.raises(NonUnitaryError):
        moment_matrix(_bell(), m, identity((2, 2)) * 2.0)


# --- Closed form ---

def test_bell_diverges():
    _, m = _w0()
    q = analytic_quantities(_bell(), m, SWAP)
    assert q.ratio == pytest.approx(2.0)
    assert q.d.real == pytest.approx(-0.5)
    result = w_infinity(_bell(), m, SWAP)
    assert result.diverges
    assert result.case == "diverges"
    assert result.value is None
    assert result.detected


def test_divergence_step_crosses_floor():
    _, m = _w0()
    floor = Tolerances().divergence_floor
    q = analytic_quantities(_bell(), m, SWAP)
    at = w_infinity(_bell(), m, SWAP).diverged_at
    assert at == 13
    assert series_value(q, at) < floor
    assert series_value(q, at - 1) >= floor


def test_product_state_on_the_boundary():
    # |00> has kappa |k| = 1 and d = 0: the sequence stalls at w_1
    _, m = _w0()
    rho = make(StateSpec(family="product", kets=["0", "0"]))
    q = analytic_quantities(rho, m, SWAP)
    assert q.ratio == pytest.approx(1.0)
    assert abs(q.d) < 1e-12
    result = w_infinity(rho, m, SWAP)
    assert not result.diverges
    assert result.value == pytest.approx(0.25)


def test_phi_family_at_pi_with_zz():
    _, m = _w0()
    rho = make(StateSpec(family="phi_family", phi=np.pi))
    result = w_infinity(rho, m, ZZ)
    assert result.case == "converges"
    assert result.ratio == pytest.approx(2.0 / 3.0)
    assert result.value == pytest.approx(-5.0 / 8.0)


def test_w_infinity_needs_involution():
    _, m = _w0()
    with pytest.raises(NotInvolutoryError):
        w_infinity(_bell(), m, _phase_gate())


def test_vanishing_denominator():
    # Tr_A(Z (x) Z) = 0, so kappa^-1 vanishes for every state
    d = decomposition_from_dict({"dA": 2, "dB": 2, "terms": [{"coeff": 1.0, "A": "Z", "B": "Z"}]})
    m = map_from_witness(assemble(d), 2, 2)
    with pytest.raises(VanishingDenominatorError) as exc:
        iterate(_bell(), m, _cfg())
    assert abs(exc.value.value) <= exc.value.tol
    with pytest.raises(VanishingDenominatorError):
        w_nl_first(_bell(), m, SWAP)


# --- Configuration ---

def test_iteration_config_rejects_non_unitary():
    with pytest.raises(NonUnitaryError):
        _cfg(u=identity((2, 2)) * 2.0)


def test_iteration_config_sequence_too_short():
    with pytest.raises(DimensionMismatchError):
        IterationConfig(u_sequence=[SWAP, ZZ], n_max=5)


def test_iteration_config_mixed_dimensions():
    with pytest.raises(DimensionMismatchError):
        IterationConfig(u_sequence=[SWAP, identity((2, 2, 2))], n_max=2)


def test_unitary_dimension_must_match_map():
    _, m = _w0()
    with pytest.raises(DimensionMismatchError):
        iterate(_bell(), m, _cfg(u=identity((2, 2, 2))))


def test_state_dimension_must_match_map():
    _, m = _w0()
    with pytest.raises(DimensionMismatchError):
        iterate(make(StateSpec(family="smolin")), m, _cfg())


def test_involution_and_digest():
    assert is_involution(SWAP)
    assert is_involution(ZZ)
    assert not is_involution(_phase_gate())
    assert unitary_digest(SWAP) == unitary_digest(swap_operator(2))
    assert unitary_digest(SWAP) != unitary_digest(ZZ)


# --- Restricted path ---

def test_restricted_matches_full_state():
    d, m = _w0()
    cert = certify(d, m, SWAP)
    rho = make(StateSpec(family="phi_family", phi=2.0))
    full = iterate(rho, m, _cfg(n=5))
    restricted = iterate_restricted(expectation_vector(rho, d), d, m, _cfg(n=5), cert)
    assert np.allclose(restricted.w_values, full.w_values, atol=1e-10)


def test_restricted_needs_certificate():
    d, m = _w0()
    with pytest.raises(NotAccessibleError) as exc:
        iterate_restricted(expectation_vector(_bell(), d), d, m, _cfg(), None)
    assert exc.value.check == "certificate_missing"


def test_restricted_rejects_certificate_for_other_unitary():
    d, m = _w0()
    cert = certify(d, m, SWAP)
    with pytest.raises(NotAccessibleError) as exc:
        iterate_restricted(expectation_vector(_bell(), d), d, m, _cfg(u=ZZ), cert)
    assert exc.value.check == "certificate_unitary_mismatch"


def test_restricted_rejects_failed_certificate():
    d, m = _w0()
    xi = pauli_string("XI")
    cert = certify(d, m, xi)
    assert cert.verdict == "not-certified"
    with pytest.raises(NotAccessibleError):
        iterate_restricted(expectation_vector(_bell(), d), d, m, _cfg(u=xi), cert)


def test_restricted_vector_length_mismatch():
    d, m = _w0()
    with pytest.raises(DimensionMismatchError):
        iterate_restricted(ExpectationVector(values=[1.0]), d, m, _cfg(), certify(d, m, SWAP))


def test_w_infinity_restricted_matches_full_state():
    d, m = _w0()
    cert = certify(d, m, ZZ)
    rho = make(StateSpec(family="phi_family", phi=np.pi))
    restricted = w_infinity_restricted(expectation_vector(rho, d), d, m, ZZ, cert)
    assert restricted.value == pytest.approx(-5.0 / 8.0, abs=1e-10)
    assert restricted.case == w_infinity(rho, m, ZZ).case
