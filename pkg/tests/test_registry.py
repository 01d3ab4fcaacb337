"""Tests for state-family and unitary registries."""
import sys
import os

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import nlwitness.states  # noqa: F401  (registers the families)
from nlwitness.models import ConfigError, NonUnitaryError
from nlwitness.operators import identity, pauli_string, swap_operator
from nlwitness.registry import (
    get_factories,
    get_families,
    get_unitaries,
    register_family,
    unregister_family,
)
from nlwitness.unitaries import resolve_unitary


@pytest.fixture(autouse=True)
def _cleanup():
    yield
    unregister_family("test_family")


# --- State families ---

def test_family_info_is_normalized():
    info = get_families()["phi_family"]
    assert info["label"] == "Noisy |phi> family"
    assert info["description"] == ""
    assert {p["name"] for p in info["params"]} == {"phi", "weight"}
    assert all(p["type"] == "float" for p in info["params"])


def test_register_and_unregister():
    register_family({"type": "test_family"}, lambda spec: None)
    assert "test_family" in get_factories()
    assert get_families()["test_family"]["label"] == "test_family"
    unregister_family("test_family")
    assert "test_family" not in get_factories()


def test_duplicate_registration_warns():
    register_family({"type": "test_family"}, lambda spec: 1)
    with pytest.warns(UserWarning, match="Duplicate state family"):
        register_family({"type": "test_family"}, lambda spec: 2)
    assert get_factories()["test_family"](None) == 2


def test_unregister_unknown_is_silent():
    unregister_family("never_registered")


# --- Unitaries ---

def test_unitary_presets_registered():
    assert {"swap_AA'", "identity"} <= set(get_unitaries())


def test_resolve_named_unitaries():
    assert np.allclose(resolve_unitary("swap_AA'", 2).data, swap_operator(2).data)
    assert np.allclose(resolve_unitary("identity", 3).data, identity((3, 3)).data)
    assert resolve_unitary("swap_AA'", 3).dims == (3, 3)


def test_resolve_pauli_string():
    u = resolve_unitary("ZZ", 2)
    assert np.allclose(u.data, pauli_string("ZZ").data)
    assert u.dims == (2, 2)


def test_resolve_matrix():
    rows = [[[1 if i == j else 0, 0] for j in range(4)] for i in range(4)]
    assert np.allclose(resolve_unitary(rows, 2).data, np.eye(4))


def test_resolve_errors():
    with pytest.raises(ConfigError):
        resolve_unitary("rotate", 2)
    with pytest.raises(ConfigError):
        resolve_unitary("Z", 2)
    with pytest.raises(ConfigError):
        resolve_unitary([[[1, 0], [0, 0]], [[0, 0]]], 1)
    rows = [[[2 if i == j else 0, 0] for j in range(4)] for i in range(4)]
    with pytest.raises(NonUnitaryError):
        resolve_unitary(rows, 2)
