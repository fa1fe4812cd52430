"""Optimality certification and decomposition extraction.

A witness for a symmetric state is globally optimal exactly when the
state's commutant coordinate vector lies in the convex hull of the
coordinate points of its advantage maximizers. The certificate computes
the distance to that hull with a min-norm-point algorithm over the
weight simplex. At (near-)zero distance the hull weights assemble an
optimal pure-state decomposition of the state, and the certified lower
bound meets the decomposition's value from above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DomainError, hs_norm, mat_of, vec_of
from .states import SchmidtParams, local_phase
from .symmetry import SymBasis, flip_all

DEFAULT_THRESHOLDS = {"gi": 1e-5, "gw": 1e-3}

WEIGHT_PRUNE = 1e-9


def default_threshold(label: str) -> float:
    return DEFAULT_THRESHOLDS.get(label, 1e-5)


def _affine_min_norm(gram: np.ndarray) -> np.ndarray:
    """Weights minimizing the norm over the affine hull (sum fixed to one)."""
    m = gram.shape[0]
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = gram
    kkt[:m, m] = 1.0
    kkt[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:m]


def dmin_simplex(target, points) -> tuple:
    """Distance from target to the convex hull of points, with hull weights.

    Wolfe's min-norm-point algorithm on the shifted point set. Returns
    (distance, weights) where weights is a simplex vector over the input
    points realizing the closest hull element.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tgt = np.asarray(target, dtype=float)
    if pts.size == 0:
        raise DomainError("need at least one hull point")
    if pts.shape[1] != tgt.shape[0]:
        raise DomainError("hull points and target have mismatched dimensions")
    shifted = pts - tgt[None, :]
    n = shifted.shape[0]
    gram = shifted @ shifted.T

    sel = [int(np.argmin(np.diag(gram)))]
    w_sel = np.array([1.0])
    xx_prev = np.inf
    for _ in range(2 * n + 64):
        gs = gram[np.ix_(sel, sel)]
        xx = float(w_sel @ gs @ w_sel)
        prods = gram[:, sel] @ w_sel
        j = int(np.argmin(prods))
        gap = xx - float(prods[j])
        if gap <= 1e-13 * max(1.0, abs(xx)) or j in sel:
            break
        if xx > xx_prev - 1e-16 * max(1.0, abs(xx)):
            break
        xx_prev = xx
        sel.append(j)
        w_sel = np.append(w_sel, 0.0)
        for _ in range(len(sel) + 8):
            y = _affine_min_norm(gram[np.ix_(sel, sel)])
            if y.min() >= -1e-14:
                w_sel = np.clip(y, 0.0, None)
                w_sel /= w_sel.sum()
                break
            neg = y < 1e-14
            steps = w_sel[neg] / (w_sel[neg] - y[neg])
            theta = float(np.clip(steps.min(), 0.0, 1.0))
            w_sel = (1.0 - theta) * w_sel + theta * y
            keep = w_sel > 1e-14
            if keep.all():
                keep[int(np.argmin(w_sel))] = False
            sel = [s for s, k in zip(sel, keep) if k]
            w_sel = w_sel[keep]
            w_sel /= w_sel.sum()

    weights = np.zeros(n)
    weights[sel] = w_sel
    resid = shifted.T @ weights
    return float(np.linalg.norm(resid)), weights


@dataclass(frozen=True)
class Certificate:
    """Hull-distance verdict for a finished witness optimization."""

    d_min: float
    weights: np.ndarray
    verdict: str           # "global", "local", or "inconclusive"
    threshold: float


def certify(result, threshold: float | None = None) -> Certificate:
    """Judge a WitnessResult: is the located witness globally optimal?

    The verdict is "global" when the hull distance is below the
    threshold, "local" when it exceeds ten times the threshold, and
    "inconclusive" in between. The default threshold depends on the
    symmetry family of the result's basis.
    """
    if threshold is None:
        threshold = default_threshold(result.basis.label)
    d, w = dmin_simplex(result.r, result.candidate_set.q_matrix())
    if d <= threshold:
        verdict = "global"
    elif d > 10.0 * threshold:
        verdict = "local"
    else:
        verdict = "inconclusive"
    return Certificate(d, w, verdict, threshold)


@dataclass(frozen=True)
class DecompositionTerm:
    weight: float
    params: SchmidtParams
    op: np.ndarray         # symmetrized projector of the member state
    e_value: float

    @property
    def cls(self) -> str:
        return "w" if self.e_value <= 1e-9 else "ghz"


@dataclass(frozen=True)
class Decomposition:
    """Optimal pure-state decomposition assembled from certified hull weights."""

    terms: tuple
    residual: float        # Hilbert-Schmidt gap between the state and the mixture

    def implied_value(self) -> float:
        return float(sum(t.weight * t.e_value for t in self.terms))


def extract_decomposition(cert: Certificate, cset, basis: SymBasis, rho) -> Decomposition:
    """Turn certified hull weights into an explicit optimal decomposition.

    Only a "global" certificate identifies the hull weights with a valid
    decomposition; anything weaker raises. Weights below the pruning
    floor are dropped and the rest renormalized. Each surviving member
    contributes its symmetrized projector, so the weighted mixture should
    reproduce the state up to the reported residual.
    """
    if cert.verdict != "global":
        raise DomainError("decomposition requires a global certificate, got %r" % cert.verdict)
    members = cset.members
    if len(cert.weights) != len(members):
        raise DomainError("certificate weights do not align with the candidate members")
    pairs = [(float(w), c) for w, c in zip(cert.weights, members) if w > WEIGHT_PRUNE]
    total = sum(w for w, _ in pairs)
    if total <= 0.0:
        raise DomainError("all hull weights pruned away")
    pairs = [(w / total, c) for w, c in pairs]
    pairs.sort(key=lambda wc: -wc[0])
    terms = tuple(
        DecompositionTerm(w, c.params, basis.devectorize(c.q), c.e_value) for w, c in pairs)
    mix = sum(t.weight * t.op for t in terms)
    residual = hs_norm(mat_of(rho) - mix)
    return Decomposition(terms, residual)


def z_pattern_coefficients(psi, tol: float = 1e-6) -> np.ndarray:
    """Align a state to the excitation-symmetric real form and read it off.

    The target form has one real amplitude per excitation level:
    a0|000> + a1 (|001>+|010>+|100>) + a2 (|011>+|101>+|110>) + a3|111>.
    The function searches the local-phase gauge freedom (diagonal phase
    rotations, a global phase, and the all-qubit flip) for an alignment
    and returns (a0, a1, a2, a3) with a0 > 0. Raises DomainError when the
    state does not sit on such an orbit within the tolerance.
    """
    v = np.asarray(vec_of(psi), dtype=complex).reshape(8).copy()
    if abs(v[0]) < abs(v[7]):
        v = flip_all() @ v
    if abs(v[0]) < 0.1:
        raise DomainError("no dominant zero-excitation amplitude to anchor the gauge")
    v *= np.exp(-1j * np.angle(v[0]))

    one_exc, two_exc = [1, 2, 4], [3, 5, 6]
    arg_a, arg_b, arg_c = (float(np.angle(v[i])) for i in (4, 2, 1))
    theta0 = (arg_a + arg_b + arg_c) / 3.0
    best = None
    for k in range(3):
        theta = theta0 + 2.0 * np.pi * k / 3.0
        u = local_phase(theta - arg_a, theta - arg_b)
        w = u @ v
        scale = np.abs(w)
        err = float(np.max(np.abs(w.imag[scale > tol]))) if (scale > tol).any() else 0.0
        if best is None or err < best[0]:
            best = (err, w)
    err, w = best
    if err > tol:
        raise DomainError("state is not on an excitation-symmetric orbit (imag %.2e)" % err)
    levels = [w[0].real, w[one_exc].real, w[two_exc].real, w[7].real]
    a = np.array([np.mean(lv) for lv in levels])
    spread = max(float(np.max(np.abs(lv - np.mean(lv)))) for lv in levels[1:3])
    if spread > tol:
        raise DomainError("excitation levels are not uniform (spread %.2e)" % spread)
    return a
