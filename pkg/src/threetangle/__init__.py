"""Mixed-state three-tangle of three qubits.

Witness-based lower bounds with convex-hull optimality certificates,
optimal pure-state decompositions, and an independent decomposition
oracle for upper bounds.
"""

__version__ = "0.1.0"

from .linalg import (
    DensityMatrix,
    DomainError,
    HermitianOp,
    PureState,
    StructureError,
    SymmetryError,
)
from .states import SchmidtParams, family_state, ghz, schmidt_state, w_state
from .tangle import t3_pure, t3_schmidt, tau3
from .symmetry import SymBasis, SymmetryGroup, commutant_basis, gi_basis, gw_basis

__all__ = [
    "DensityMatrix",
    "DomainError",
    "HermitianOp",
    "PureState",
    "SchmidtParams",
    "StructureError",
    "SymBasis",
    "SymmetryError",
    "SymmetryGroup",
    "commutant_basis",
    "family_state",
    "ghz",
    "gi_basis",
    "gw_basis",
    "schmidt_state",
    "t3_pure",
    "t3_schmidt",
    "tau3",
    "w_state",
]
