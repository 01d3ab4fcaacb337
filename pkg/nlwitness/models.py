"""Shared Pydantic models and errors for NLWitness."""
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator


# --- Errors ---

class NLWitnessError(Exception):
    """Base class. Not a ValueError, so it passes through pydantic validators untouched."""


class DimensionMismatchError(NLWitnessError):
    pass


class NonHermitianError(NLWitnessError):
    pass


class NonUnitaryError(NLWitnessError):
    pass


class NotInvolutoryError(NLWitnessError):
    """Raised when the analytic formula is requested for a U with U^2 != 1."""


class InvalidStateError(NLWitnessError):
    pass


class InvalidOperatorError(NLWitnessError):
    """Raised for malformed operators: bad shape, non-finite entries, unknown labels."""


class VanishingDenominatorError(NLWitnessError):
    """Raised when kappa^-1 = Tr(rho Lambda[1]) is too small to divide by."""

    def __init__(self, value: float, tol: float):
        self.value = value
        self.tol = tol
        super().__init__(
            f"kappa^-1 = {value:.3e} is not above the division guard {tol:.1e}"
        )


class NotAccessibleError(NLWitnessError):
    """Raised when a quantity cannot be evaluated from the measured expectations alone."""

    def __init__(self, check: str, residual: Optional[float] = None):
        self.check = check
        self.residual = residual
        detail = f" (span residual {residual:.3e})" if residual is not None else ""
        super().__init__(f"Accessibility check '{check}' failed{detail}")


class ConfigError(NLWitnessError):
    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"Invalid config field '{field}': {reason}")


# --- Config models ---

class Tolerances(BaseModel):
    hermitian: float = 1e-9
    psd: float = 1e-9
    span: float = 1e-9
    div: float = 1e-12
    d: float = 1e-10
    divergence_floor: float = -1e6


Complex = Tuple[float, float]
MatrixSpec = List[List[Complex]]


class TermSpec(BaseModel):
    """One term c * A (x) B of a witness decomposition file."""
    coeff: float
    A: Union[str, MatrixSpec]
    B: Union[str, MatrixSpec]

    @field_validator("A", "B")
    @classmethod
    def _pauli_labels(cls, v):
        if isinstance(v, str):
            if not v or set(v) - set("IXYZ"):
                raise ValueError(f"pauli string must be nonempty over I,X,Y,Z, got '{v}'")
        return v


class DecompositionFile(BaseModel):
    dA: int = Field(ge=2)
    dB: int = Field(ge=2)
    terms: List[TermSpec] = Field(min_length=1)


StateFamily = Literal[
    "bell", "phi_family", "smolin", "product", "random_separable", "random_state",
]


class StateSpec(BaseModel):
    """State factory parameters. `p` is a white-noise admixture for every family."""
    family: StateFamily
    which: Literal["phi+", "phi-", "psi+", "psi-"] = "phi+"
    phi: float = 0.0
    weight: float = 2.0 / 3.0
    p: float = Field(default=0.0, ge=0.0, le=1.0)
    kets: List[Union[str, List[Complex]]] = []
    seed: int = 0
    mixture_size: int = Field(default=4, ge=1)
    dims: List[int] = [2, 2]


class ScanSpec(BaseModel):
    axis: Literal["phi", "p"]
    start: float
    end: float
    steps: int = Field(ge=2)


class RunConfig(BaseModel):
    """Fully resolved run configuration. Serialized into every report."""
    witness: str
    state: StateSpec = StateSpec(family="bell")
    unitary: Union[str, MatrixSpec] = "swap_AA'"
    n: int = Field(default=10, ge=0)
    frame: Literal["projector", "choi"] = "projector"
    scan: Optional[ScanSpec] = None
    shots: int = Field(default=1000, ge=1)
    trials: int = Field(default=200, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    out: Optional[str] = None
    format: Optional[Literal["csv", "json"]] = None
    tolerances: Tolerances = Tolerances()

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
