"""Fourier-truncation simulation of noisy random circuits with Pauli twirls."""

from .core import (
    ALL_NOISY,
    CLIFFORD_PERFECT_T,
    Bits,
    BudgetExceeded,
    CapExceeded,
    CircuitSpec,
    EnsembleSpec,
    Gate,
    NoiseParams,
    PauliString,
    PreconditionError,
    TwirlSite,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_NOISY",
    "CLIFFORD_PERFECT_T",
    "Bits",
    "BudgetExceeded",
    "CapExceeded",
    "CircuitSpec",
    "EnsembleSpec",
    "Gate",
    "NoiseParams",
    "PauliString",
    "PreconditionError",
    "TwirlSite",
]
