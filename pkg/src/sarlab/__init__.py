"""Optimal storage and retrieval of a unitary drawn from a known pair.

Modules
-------
linalg      small dense linear algebra, Choi operators, Haar sampling
canonical   canonical form of a unitary pair and storage states
analytics   closed-form fidelities and success probabilities
oracle      independent brute-force and Monte-Carlo checks
circuits    retrieval instruments, dilations and the qudit isometry
optics      wave-plate compilation of the retrieval POVM
experiment  virtual tomography experiment and estimators
figures     sweep tables for the figures
cli         command-line entry point
"""

from .analytics import (Regime, average_fidelity, chi, deterministic_fidelity,
                        protocol_report, success_probability)
from .canonical import CanonicalPair, canonicalize, storage_state

__all__ = [
    "CanonicalPair", "Regime", "average_fidelity", "canonicalize", "chi",
    "deterministic_fidelity", "protocol_report", "storage_state", "success_probability",
]
__version__ = "0.1.0"
