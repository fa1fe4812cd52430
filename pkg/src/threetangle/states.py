"""Reference states aboard the three-qubit Hilbert space.

Provides the standard entangled kets, the symmetric one- and
two-parameter mixed families used throughout the tests and the
command line tool, and the generalized Schmidt chart that
parameterizes pure states up to local unitaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DensityMatrix, DomainError, PureState, StructureError, kron3, projector

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)

# GHZ-chart amplitudes sit on computational indices |000>, |100>, |101>, |110>, |111>.
SCHMIDT_IDX = (0, 4, 5, 6, 7)


def ghz() -> PureState:
    v = np.zeros(8, dtype=complex)
    v[0] = v[7] = 1.0 / SQ2
    return PureState(v)


def w_state() -> PureState:
    v = np.zeros(8, dtype=complex)
    v[1] = v[2] = v[4] = 1.0 / SQ3   # |001>, |010>, |100>
    return PureState(v)


def w_bar_state() -> PureState:
    """Spin-flipped W: equal superposition of the two-excitation kets."""
    v = np.zeros(8, dtype=complex)
    v[3] = v[5] = v[6] = 1.0 / SQ3   # |011>, |101>, |110>
    return PureState(v)


def local_phase(alpha: float, beta: float) -> np.ndarray:
    """Diagonal product unitary with phases alpha, beta, -(alpha+beta) on the three qubits."""
    za = np.diag([1.0, np.exp(1j * alpha)])
    zb = np.diag([1.0, np.exp(1j * beta)])
    zc = np.diag([1.0, np.exp(-1j * (alpha + beta))])
    return kron3(za, zb, zc)


def w_phase_state(n: int) -> PureState:
    """One of the three mutually orthogonal phase-twisted W kets (n = 1, 2, 3).

    The n-th state carries phases 1, w, w^2 (w the n-dependent third
    root of unity) across |010> and |100>; n = 1 is the plain W state.
    """
    if n not in (1, 2, 3):
        raise DomainError(f"phase index must be 1, 2 or 3, got {n}")
    theta = 2.0 * np.pi * (n - 1) / 3.0
    u = local_phase(-theta, theta)
    return PureState(u @ w_state().vec)


def family_state(family: str, p: float | None = None, q: float | None = None) -> DensityMatrix:
    """Symmetric mixed-state families used as benchmarks.

    "gi"  : (1-q) * GHZ projector + q * I/8, parameter q in [0, 1].
    "gw"  : (1-p) * GHZ projector + p * W projector, parameter p in [0, 1].
    "gwi" : (1-p-q) * GHZ + p * W + q * I/8, p, q >= 0, p + q <= 1.
    """
    eye8 = np.eye(8, dtype=complex) / 8.0
    pg = projector(ghz())
    pw = projector(w_state())
    key = family.lower()
    if key == "gi":
        if q is None or p is not None:
            raise DomainError("family 'gi' takes exactly the mixing parameter q")
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"q={q!r} outside [0, 1]")
        return DensityMatrix((1.0 - q) * pg + q * eye8)
    if key == "gw":
        if p is None or q is not None:
            raise DomainError("family 'gw' takes exactly the mixing parameter p")
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p={p!r} outside [0, 1]")
        return DensityMatrix((1.0 - p) * pg + p * pw)
    if key == "gwi":
        if p is None or q is None:
            raise DomainError("family 'gwi' takes both p and q")
        if p < 0.0 or q < 0.0 or p + q > 1.0:
            raise DomainError(f"(p, q)=({p!r}, {q!r}) outside the simplex")
        return DensityMatrix((1.0 - p - q) * pg + p * pw + q * eye8)
    raise DomainError(f"unknown family {family!r}")


def su2(a: float, b: float, c: float) -> np.ndarray:
    """Single-qubit rotation exp(-i a Z/2) exp(-i b Y/2) exp(-i c Z/2)."""
    cb, sb = np.cos(0.5 * b), np.sin(0.5 * b)
    ea, ec = np.exp(-0.5j * a), np.exp(-0.5j * c)
    return np.array([[ea * ec * cb, -ea * np.conj(ec) * sb],
                     [np.conj(ea) * ec * sb, np.conj(ea * ec) * cb]])


@dataclass(frozen=True)
class SchmidtParams:
    """Point of the generalized Schmidt chart.

    cls     : "ghz" (genuine tripartite sector) or "w" (zero-invariant sector).
    lambdas : five nonnegative amplitudes with sum of squares 1; the "w"
              chart pins lambdas[4] to zero.
    phi     : phase on the second amplitude; pinned to zero for "w".
    angles  : 3x3 array of Euler angles (a, b, c) per qubit applied on top
              of the canonical amplitudes.
    """

    cls: str
    lambdas: tuple
    phi: float
    angles: tuple

    def __post_init__(self):
        if self.cls not in ("ghz", "w"):
            raise DomainError(f"chart class must be 'ghz' or 'w', got {self.cls!r}")
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.shape != (5,):
            raise StructureError(f"lambdas must have shape (5,), got {lam.shape}")
        if np.any(lam < -1e-12):
            raise DomainError("lambdas must be nonnegative")
        if abs(np.sum(lam ** 2) - 1.0) > 1e-10:
            raise DomainError("lambdas must have unit sum of squares")
        ang = np.asarray(self.angles, dtype=float)
        if ang.shape != (3, 3):
            raise StructureError(f"angles must have shape (3, 3), got {ang.shape}")
        if self.cls == "w" and (abs(lam[4]) > 1e-12 or abs(self.phi) > 1e-12):
            raise DomainError("'w' chart requires lambdas[4] = 0 and phi = 0")
        object.__setattr__(self, "lambdas", tuple(float(x) for x in lam))
        object.__setattr__(self, "phi", float(self.phi))
        object.__setattr__(self, "angles", tuple(tuple(float(x) for x in row) for row in ang))

    def canonical_amplitudes(self) -> np.ndarray:
        lam = np.asarray(self.lambdas)
        amps = lam.astype(complex)
        amps[1] = lam[1] * np.exp(1j * self.phi)
        return amps


def schmidt_state(params: SchmidtParams) -> PureState:
    """Assemble the pure state for a Schmidt-chart point."""
    amps = params.canonical_amplitudes()
    v = np.zeros(8, dtype=complex)
    v[list(SCHMIDT_IDX)] = amps
    u = kron3(su2(*params.angles[0]), su2(*params.angles[1]), su2(*params.angles[2]))
    return PureState.normalized(u @ v)
