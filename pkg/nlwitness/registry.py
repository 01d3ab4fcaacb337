"""Registries for state families and named unitaries.

State modules register a family from an info dict and a factory:
    register_family({"type": "smolin", "label": "...", "params": [...]}, make_smolin)
"""
import warnings
from typing import Callable, Dict

# --- State families (filled by nlwitness.states at import) ---

_FAMILY_REGISTRY: dict = {}
_FACTORIES: dict = {}

# --- Unitary presets: factories take the local dimension d_A ---

_UNITARY_REGISTRY: dict = {}
_UNITARY_FACTORIES: dict = {}


def _spec(info: dict) -> dict:
    name = info["type"]
    return {
        "type": name,
        "label": info.get("label", name),
        "description": info.get("description", ""),
        "params": [
            {
                "name": p["name"],
                "type": p.get("type", "float"),
                "default": p.get("default"),
            }
            for p in info.get("params", [])
        ],
    }


def register_family(family_info: dict, factory: Callable) -> None:
    """Register a state family. A duplicate name warns and overwrites."""
    name = family_info["type"]
    if name in _FAMILY_REGISTRY:
        warnings.warn(f"Duplicate state family '{name}', overwriting previous registration")
    _FAMILY_REGISTRY[name] = _spec(family_info)
    _FACTORIES[name] = factory


def unregister_family(name: str) -> None:
    """Remove a family. Silent if not found."""
    _FAMILY_REGISTRY.pop(name, None)
    _FACTORIES.pop(name, None)


def get_families() -> Dict[str, dict]:
    return dict(_FAMILY_REGISTRY)


def get_factories() -> Dict[str, Callable]:
    return dict(_FACTORIES)


def register_unitary(unitary_info: dict, factory: Callable) -> None:
    name = unitary_info["type"]
    if name in _UNITARY_REGISTRY:
        warnings.warn(f"Duplicate unitary preset '{name}', overwriting previous registration")
    _UNITARY_REGISTRY[name] = _spec(unitary_info)
    _UNITARY_FACTORIES[name] = factory


def get_unitaries() -> Dict[str, dict]:
    return dict(_UNITARY_REGISTRY)


def get_unitary_factories() -> Dict[str, Callable]:
    return dict(_UNITARY_FACTORIES)
