"""Dense linear algebra primitives shared by the rest of the package.

State vectors are flat complex arrays over the computational basis
|q1 q2 q3> with qubit 1 the most significant bit. Operators are dense
complex square matrices. The wrapper types validate once at
construction and freeze their payload; hot loops should pull out the
raw arrays and work on those.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class StructureError(ValueError):
    """Input has the wrong shape or lacks the required algebraic structure."""


class DomainError(ValueError):
    """Input is well formed but outside the supported domain."""


class SymmetryError(DomainError):
    """State and symmetry group do not fit together."""


class NumericalError(RuntimeError):
    """A solver failed outright; carries whatever partial results exist."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PureState:
    """Unit-norm state vector of a finite-dimensional system."""

    vec: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.vec, dtype=complex)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise StructureError(f"state vector must be 1-d with dim >= 2, got shape {arr.shape}")
        nrm = np.linalg.norm(arr)
        if abs(nrm - 1.0) > NORM_TOL:
            raise StructureError(f"state vector norm {nrm!r} is not 1 within {NORM_TOL}")
        object.__setattr__(self, "vec", _readonly(arr))

    @classmethod
    def normalized(cls, vec) -> "PureState":
        """Build a PureState by rescaling ``vec`` to unit norm."""
        arr = np.asarray(vec, dtype=complex)
        nrm = np.linalg.norm(arr)
        if nrm < 1e-300:
            raise DomainError("cannot normalize a zero vector")
        return cls(arr / nrm)

    @property
    def dim(self) -> int:
        return self.vec.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.vec, self.vec.conj())

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.vec, other.vec))


@dataclass(frozen=True)
class HermitianOp:
    """Hermitian operator; stores the exact Hermitian part after validation."""

    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise StructureError(f"operator must be square, got shape {arr.shape}")
        dev = np.max(np.abs(arr - arr.conj().T))
        if dev > HERM_TOL:
            raise StructureError(f"operator deviates from Hermitian by {dev!r} > {HERM_TOL}")
        # Symmetrize exactly so later eigensolves never see stray antihermitian dust.
        object.__setattr__(self, "mat", _readonly(0.5 * (arr + arr.conj().T)))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Positive semidefinite unit-trace operator."""

    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise StructureError(f"density matrix must be square, got shape {arr.shape}")
        dev = np.max(np.abs(arr - arr.conj().T))
        if dev > HERM_TOL:
            raise StructureError(f"density matrix deviates from Hermitian by {dev!r} > {HERM_TOL}")
        arr = 0.5 * (arr + arr.conj().T)
        tr = np.trace(arr).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StructureError(f"trace {tr!r} is not 1 within {TRACE_TOL}")
        lam_min = float(np.linalg.eigvalsh(arr)[0])
        if lam_min < -PSD_TOL:
            raise StructureError(f"smallest eigenvalue {lam_min!r} < -{PSD_TOL}")
        object.__setattr__(self, "mat", _readonly(arr))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eig(self):
        """Eigenvalues (ascending) and eigenvector columns."""
        return np.linalg.eigh(self.mat)

    def rank(self, tol: float = 1e-12) -> int:
        vals = np.linalg.eigvalsh(self.mat)
        return int(np.sum(vals > tol * max(1.0, vals[-1])))


def mat_of(x) -> np.ndarray:
    """Raw matrix of an operator-like argument (wrapper or array)."""
    if isinstance(x, (HermitianOp, DensityMatrix)):
        return x.mat
    if isinstance(x, PureState):
        return x.projector()
    return np.asarray(x, dtype=complex)


def vec_of(x) -> np.ndarray:
    """Raw vector of a state-like argument (wrapper or array)."""
    if isinstance(x, PureState):
        return x.vec
    return np.asarray(x, dtype=complex)


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dag b)."""
    am, bm = mat_of(a), mat_of(b)
    return complex(np.vdot(am.ravel(), bm.ravel()))


def hs_norm(a) -> float:
    return float(np.linalg.norm(mat_of(a).ravel()))


def projector(psi) -> np.ndarray:
    v = vec_of(psi)
    return np.outer(v, v.conj())


def expval(op, state) -> float:
    """Real expectation Tr(op rho) or <psi|op|psi>; both args Hermitian-like."""
    om = mat_of(op)
    if isinstance(state, PureState) or (np.asarray(state).ndim == 1):
        v = vec_of(state)
        val = complex(np.vdot(v, om @ v))
    else:
        val = complex(np.trace(om @ mat_of(state)))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise DomainError(f"expectation value has imaginary part {val.imag!r}")
    return float(val.real)


def min_eigenvalue(op) -> float:
    return float(np.linalg.eigvalsh(mat_of(op))[0])


def kron3(a, b, c) -> np.ndarray:
    return np.kron(np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)),
                   np.asarray(c, dtype=complex))
