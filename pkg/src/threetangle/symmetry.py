"""Symmetry groups of three-qubit states and their commutant algebras.

A symmetry group is described by a finite list of unitary elements plus
optional Hermitian generators of continuous phase rotations. The
commutant (the algebra of operators commuting with every element) is
computed as the null space of a stacked linear system over the real
vector space of Hermitian matrices. Witness optimization runs entirely
in coordinates over an orthonormal Hermitian basis of that commutant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import DomainError, PureState, SymmetryError, kron3, mat_of, projector, vec_of
from .states import ghz, w_bar_state, w_phase_state, w_state

SQ2 = np.sqrt(2.0)
SQ6 = np.sqrt(6.0)


def qubit_permutation_unitaries() -> list[np.ndarray]:
    """The six unitaries permuting the tensor factors."""
    mats = []
    for perm in itertools.permutations(range(3)):
        u = np.zeros((8, 8))
        for idx in range(8):
            bits = [(idx >> (2 - k)) & 1 for k in range(3)]
            newbits = [bits[perm[k]] for k in range(3)]
            jdx = (newbits[0] << 2) | (newbits[1] << 1) | newbits[2]
            u[jdx, idx] = 1.0
        mats.append(u)
    return mats


def flip_all() -> np.ndarray:
    """Simultaneous bit flip on all three qubits."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    return kron3(sx, sx, sx).real


def _number_diff_generator(first: int, second: int) -> np.ndarray:
    """Diagonal generator counting excitation of qubit `first` minus qubit `second`."""
    diag = np.zeros(8)
    for idx in range(8):
        bits = [(idx >> (2 - k)) & 1 for k in range(3)]
        diag[idx] = bits[first] - bits[second]
    return np.diag(diag)


@dataclass(frozen=True)
class SymmetryGroup:
    """Finite unitary elements plus Hermitian generators of phase rotations."""

    label: str
    elements: tuple
    generators: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(np.asarray(u, dtype=complex) for u in self.elements))
        object.__setattr__(self, "generators", tuple(np.asarray(g, dtype=complex) for g in self.generators))

    def is_symmetry_of(self, rho, tol: float = 1e-10) -> bool:
        m = mat_of(rho)
        for u in self.elements:
            if np.max(np.abs(u @ m @ u.conj().T - m)) > tol:
                return False
        for g in self.generators:
            if np.max(np.abs(g @ m - m @ g)) > tol:
                return False
        return True

    def sampled_elements(self, n_phase: int = 6) -> list[np.ndarray]:
        """Group elements with continuous phases sampled on a regular grid."""
        if not self.generators:
            return list(self.elements)
        grids = [np.linspace(0.0, 2.0 * np.pi, n_phase, endpoint=False)] * len(self.generators)
        rotations = []
        for phases in itertools.product(*grids):
            h = sum(a * g for a, g in zip(phases, self.generators))
            rotations.append(scipy.linalg.expm(1j * h))
        return [r @ u for r in rotations for u in self.elements]

    def orbit(self, psi: PureState, n_phase: int = 6, tol: float = 1e-8) -> list[PureState]:
        """Distinct states (up to global phase) reachable from psi."""
        reps: list[PureState] = []
        projs: list[np.ndarray] = []
        for u in self.sampled_elements(n_phase):
            cand = u @ psi.vec
            pc = np.outer(cand, cand.conj())
            if all(np.linalg.norm(pc - p) > tol for p in projs):
                reps.append(PureState(cand))
                projs.append(pc)
        return reps


def ghz_invariance_group() -> SymmetryGroup:
    """Permutations, the collective flip, and the two-parameter phase torus fixing GHZ."""
    perms = qubit_permutation_unitaries()
    f = flip_all()
    elements = perms + [f @ u for u in perms]
    gens = (_number_diff_generator(0, 2), _number_diff_generator(1, 2))
    return SymmetryGroup("gi", tuple(elements), gens)


def ghz_w_invariance_group() -> SymmetryGroup:
    """Permutations combined with third-root phase rotations; fixes GHZ and W projectors."""
    perms = qubit_permutation_unitaries()
    elements = []
    for n in range(3):
        ph = np.diag([1.0, np.exp(2j * np.pi * n / 3.0)])
        r = kron3(ph, ph, ph)
        elements.extend(r @ u for u in perms)
    return SymmetryGroup("gw", tuple(elements))


def hermitian_basis(dim: int) -> np.ndarray:
    """HS-orthonormal basis of Hermitian dim x dim matrices, shape (dim*dim, dim, dim)."""
    ops = np.zeros((dim * dim, dim, dim), dtype=complex)
    k = 0
    for i in range(dim):
        ops[k, i, i] = 1.0
        k += 1
    for i in range(dim):
        for j in range(i + 1, dim):
            ops[k, i, j] = ops[k, j, i] = 1.0 / SQ2
            k += 1
            ops[k, i, j] = -1j / SQ2
            ops[k, j, i] = 1j / SQ2
            k += 1
    return ops


@dataclass(frozen=True)
class SymBasis:
    """Orthonormal Hermitian basis of a commutant algebra."""

    label: str
    ops: np.ndarray                  # (D, dim, dim)
    group: SymmetryGroup
    identity_coords: np.ndarray = field(init=False)

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=complex)
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        icoords = np.einsum("dii->d", ops).real.copy()
        icoords.setflags(write=False)
        object.__setattr__(self, "identity_coords", icoords)

    @property
    def size(self) -> int:
        return self.ops.shape[0]

    @property
    def dim(self) -> int:
        return self.ops.shape[1]

    def vectorize(self, op, check: bool = False) -> np.ndarray:
        m = mat_of(op)
        v = np.einsum("dij,ji->d", self.ops, m).real
        if check:
            if np.max(np.abs(self.devectorize(v) - m)) > 1e-10:
                raise SymmetryError("operator lies outside the commutant span")
        return v

    def devectorize(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise DomainError(f"coordinate vector must have shape ({self.size},), got {v.shape}")
        return np.einsum("d,dij->ij", v, self.ops)

    def symmetrize(self, op) -> np.ndarray:
        """Orthogonal projection onto the commutant span."""
        return self.devectorize(self.vectorize(op))

    def coords_of_state(self, psi) -> np.ndarray:
        """Coordinates of the projector onto psi (a pure-state image point)."""
        v = vec_of(psi)
        return np.einsum("i,dij,j->d", v.conj(), self.ops, v).real


def commutant_basis(group: SymmetryGroup, dim: int = 8, tol: float = 1e-10) -> SymBasis:
    """Orthonormal Hermitian basis of the algebra commuting with the whole group."""
    hb = hermitian_basis(dim)
    n = dim * dim
    rows = []
    for u in group.elements:
        moved = np.einsum("ab,nbc,dc->nad", u, hb, u.conj())
        rows.append(np.einsum("jab,kba->jk", hb, moved).real - np.eye(n))
    for g in group.generators:
        comm = 1j * (np.einsum("ab,nbc->nac", g, hb) - np.einsum("nab,bc->nac", hb, g))
        rows.append(np.einsum("jab,kba->jk", hb, comm).real)
    stacked = np.vstack(rows)
    _, svals, vt = np.linalg.svd(stacked)
    smax = svals[0] if svals.size else 1.0
    null_mask = np.zeros(n, dtype=bool)
    null_mask[: svals.size] = svals < tol * max(1.0, smax)
    null_mask[svals.size:] = True
    coeffs = vt[null_mask]
    ops = np.einsum("ck,kij->cij", coeffs, hb)
    return SymBasis("custom", ops, group)


def _sigma_ops() -> list[np.ndarray]:
    """Orthonormal Hermitian ops on the span of |000> and |111>."""
    e0 = np.zeros(8)
    e7 = np.zeros(8)
    e0[0] = 1.0
    e7[7] = 1.0
    s0 = np.outer(e0, e0) + np.outer(e7, e7)
    s1 = np.outer(e0, e7) + np.outer(e7, e0)
    s2 = -1j * np.outer(e0, e7) + 1j * np.outer(e7, e0)
    s3 = np.outer(e0, e0) - np.outer(e7, e7)
    return [s0.astype(complex), s1.astype(complex), s2.astype(complex), s3.astype(complex)]


def gi_basis() -> SymBasis:
    """Three-element commutant basis for the GHZ plus white-noise family."""
    s0, s1, _, _ = _sigma_ops()
    eye = np.eye(8, dtype=complex)
    ops = np.stack([s0 / SQ2, s1 / SQ2, (eye - s0) / SQ6])
    return SymBasis("gi", ops, ghz_invariance_group())


def gw_basis() -> SymBasis:
    """Eight-element commutant basis for the GHZ, W and white-noise simplex.

    Order: the four GHZ-sector ops (each divided by sqrt 2), the first
    phase-twisted W projector, the normalized sum of the other two, and
    the same pair for the flipped (two-excitation) W family.
    """
    s0, s1, s2, s3 = _sigma_ops()
    f = flip_all()
    pw = [projector(w_phase_state(n)) for n in (1, 2, 3)]
    pwb = [f @ p @ f for p in pw]
    ops = np.stack([
        s0 / SQ2, s1 / SQ2, s2 / SQ2, s3 / SQ2,
        pw[0], (pw[1] + pw[2]) / SQ2,
        pwb[0], (pwb[1] + pwb[2]) / SQ2,
    ])
    return SymBasis("gw", ops, ghz_w_invariance_group())


def basis_by_label(label: str) -> SymBasis:
    if label == "gi":
        return gi_basis()
    if label == "gw":
        return gw_basis()
    raise DomainError(f"unknown basis label {label!r}; use 'gi' or 'gw'")


def asymmetric_unit(states: list[PureState], group: SymmetryGroup,
                    n_phase: int = 12, tol: float = 1e-6):
    """Cluster states into group orbits.

    Returns (reps, assignment): indices of one representative per orbit
    and, for every input state, the orbit representative it belongs to.
    """
    elements = group.sampled_elements(n_phase)
    reps: list[int] = []
    rep_projs: list[list[np.ndarray]] = []
    assignment: list[int] = []
    for i, st in enumerate(states):
        pi = projector(st)
        home = -1
        for r, projs in zip(reps, rep_projs):
            if min(np.linalg.norm(pi - p) for p in projs) < tol:
                home = r
                break
        if home < 0:
            reps.append(i)
            orbit_projs = [projector(u @ st.vec) for u in elements]
            rep_projs.append(orbit_projs)
            home = i
        assignment.append(home)
    return reps, assignment
