"""Inner maximization: best pure-state advantage against a fixed witness.

For a candidate operator Pi the advantage of a pure state is
mu(Pi, psi) = <psi|Pi|psi> - t3(psi). Its supremum over pure states is
the offset that turns Pi into a valid witness, and the states attaining
it (within a tolerance band) drive both the outer ascent and the
optimality certificate. The search runs over the generalized Schmidt
chart, split into the genuinely tripartite sector ("ghz" chart) and the
zero-invariant sector ("w" chart) where the measure term vanishes
identically. Gradients are analytic; each objective evaluation
assembles the state and all nine Euler-angle derivatives in a single
batched tensor contraction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from .linalg import DomainError, HermitianOp, NumericalError, expval, mat_of
from .states import SchmidtParams, schmidt_state, su2
from .symmetry import SymBasis
from .tangle import t3_pure, t3_schmidt

# Computational indices carrying chart amplitudes: |000>, |100>, |101>, |110>, |111>.
_BITS1 = np.array([0, 1, 1, 1, 1])
_BITS2 = np.array([0, 0, 0, 1, 1])
_BITS3 = np.array([0, 0, 1, 0, 1])


def mu_advantage(pi, psi, measure=t3_pure) -> float:
    """Advantage of a pure state against an operator: <psi|Pi|psi> - measure(psi)."""
    return expval(pi, psi) - measure(psi)


def f_value(pi, psi, rho, measure=t3_pure) -> float:
    """Witness functional Tr(Pi rho) - mu(Pi, psi); minimized over psi, it equals G."""
    return expval(pi, rho) - mu_advantage(pi, psi, measure)


@dataclass(frozen=True)
class Candidate:
    """A located (near-)maximizer of the advantage for some witness."""

    params: SchmidtParams
    q: np.ndarray          # commutant coordinates of the projector
    e_value: float         # square-root tangle of the state
    mu: float              # advantage at the witness it was found for
    f_gap: float = 0.0     # best advantage minus this one's; stamped by the set build

    @property
    def cls(self) -> str:
        """Entanglement class of the state itself (a ghz-chart solve can land on W)."""
        return "w" if self.e_value <= 1e-9 else "ghz"


@dataclass(frozen=True)
class CandidateSet:
    """Best advantage plus the candidates within a tolerance band of it.

    members carry f_gap <= tol; extras keep the remaining distinct local
    maxima, which stay useful as global affine minorants of the outer
    objective even when far from optimal at the current witness.
    """

    mu_pi: float
    tol: float
    members: tuple = ()
    extras: tuple = ()

    @property
    def best(self) -> Candidate:
        return self.members[0]

    @property
    def all_candidates(self) -> tuple:
        return self.members + self.extras

    def q_matrix(self) -> np.ndarray:
        return np.array([c.q for c in self.members])

    def e_vector(self) -> np.ndarray:
        return np.array([c.e_value for c in self.members])


@dataclass(frozen=True)
class InnerConfig:
    """Multistart allocation and local-solver tolerances."""

    n_ghz: int = 12
    n_w: int = 18
    maxiter: int = 200
    ftol: float = 1e-14
    gtol: float = 1e-9
    tol: float = 1e-6          # candidate band on mu_pi - mu
    dedup_tol: float = 1e-7
    max_keep: int = 60
    seed: int | None = None

    def __post_init__(self):
        if self.n_ghz < 1 or self.n_w < 1:
            raise DomainError("need at least one solver per chart class")

    @property
    def n_solvers(self) -> int:
        return self.n_ghz + self.n_w


def _su2_and_derivs(a: float, b: float, c: float):
    u = su2(a, b, c)
    gz = np.diag([-0.5j, 0.5j])
    cb, sb = np.cos(0.5 * b), np.sin(0.5 * b)
    dry = 0.5 * np.array([[-sb, -cb], [cb, -sb]], dtype=complex)
    rza = np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])
    rzc = np.diag([np.exp(-0.5j * c), np.exp(0.5j * c)])
    return u, gz @ u, rza @ dry @ rzc, u @ gz


class _ChartEngine:
    """Advantage values and gradients over one chart for a fixed witness."""

    def __init__(self, pi_mat: np.ndarray, cls: str, basis_ops: np.ndarray | None = None):
        self.pi = np.asarray(pi_mat, dtype=complex)
        self.cls = cls
        self.nlam = 5 if cls == "ghz" else 4
        self.has_phi = cls == "ghz"
        self.dim_theta = self.nlam + (1 if self.has_phi else 0) + 9
        self.basis_ops = basis_ops
        k = self.nlam
        self.bits = (_BITS1[:k], _BITS2[:k], _BITS3[:k])

    def split(self, theta: np.ndarray):
        x = theta[: self.nlam]
        phi = theta[self.nlam] if self.has_phi else 0.0
        ang = theta[self.dim_theta - 9:].reshape(3, 3)
        return x, phi, ang

    def _evaluate(self, theta: np.ndarray, need_q: bool):
        x, phi, ang = self.split(theta)
        nrm = np.sqrt(float(x @ x) + 1e-18)
        lam = x / nrm
        phase = np.ones(self.nlam, dtype=complex)
        if self.has_phi:
            phase[1] = np.exp(1j * phi)
        amps = lam * phase

        us = [_su2_and_derivs(*row) for row in ang]
        b1, b2, b3 = self.bits
        f1, f2, f3 = us[0][0][:, b1], us[1][0][:, b2], us[2][0][:, b3]
        # Variant 0 is the state; variants 1..9 differentiate one Euler angle each.
        s1 = np.broadcast_to(f1, (10, 2, self.nlam)).copy()
        s2 = np.broadcast_to(f2, (10, 2, self.nlam)).copy()
        s3 = np.broadcast_to(f3, (10, 2, self.nlam)).copy()
        for j in range(3):
            s1[1 + j] = us[0][1 + j][:, b1]
            s2[4 + j] = us[1][1 + j][:, b2]
            s3[7 + j] = us[2][1 + j][:, b3]
        variants = np.einsum("vak,vbk,vck,k->vabc", s1, s2, s3, amps).reshape(10, 8)
        c0 = np.einsum("ak,bk,ck->abck", f1, f2, f3).reshape(8, self.nlam)

        psi = variants[0]
        pipsi = self.pi @ psi
        if self.cls == "ghz":
            e_val = 2.0 * lam[0] * lam[4]
            de_dlam = np.array([2.0 * lam[4], 0.0, 0.0, 0.0, 2.0 * lam[0]])
        else:
            e_val = 0.0
            de_dlam = np.zeros(self.nlam)
        mu = float(np.vdot(psi, pipsi).real) - e_val

        w = c0.conj().T @ pipsi
        dmu_dlam = 2.0 * (phase.conj() * w).real - de_dlam
        dmu_dx = (dmu_dlam - lam * float(lam @ dmu_dlam)) / nrm
        grad = np.empty(self.dim_theta)
        grad[: self.nlam] = dmu_dx
        if self.has_phi:
            grad[self.nlam] = 2.0 * (np.conj(1j * amps[1]) * w[1]).real
        grad[self.dim_theta - 9:] = 2.0 * (variants[1:].conj() @ pipsi).real

        if not need_q:
            return mu, grad, psi, None, None

        # Full state-derivative rows for the exploration objective.
        jac = (np.eye(self.nlam) - np.outer(lam, lam)) / nrm
        dpsi = np.empty((self.dim_theta, 8), dtype=complex)
        dpsi[: self.nlam] = ((c0 * phase) @ jac).T
        if self.has_phi:
            dpsi[self.nlam] = c0[:, 1] * (1j * amps[1])
        dpsi[self.dim_theta - 9:] = variants[1:]
        bpsi = np.einsum("dij,j->di", self.basis_ops, psi)
        qvec = np.einsum("di,i->d", bpsi, psi.conj()).real
        dq = 2.0 * (dpsi.conj() @ bpsi.T).real
        return mu, grad, psi, qvec, dq

    def neg_mu(self, theta: np.ndarray):
        mu, grad, _, _, _ = self._evaluate(theta, need_q=False)
        return -mu, -grad

    def neg_explore(self, theta: np.ndarray, q0: np.ndarray, k_explore: float,
                    direction: np.ndarray | None):
        """Push the projector coordinates away from q0 while pinning the advantage.

        Objective: spread(q) + k_explore * mu, with spread either the smoothed
        distance ||q - q0|| or the projection onto a fixed unit direction.
        """
        mu, dmu, _, qvec, dq = self._evaluate(theta, need_q=True)
        diff = qvec - q0
        if direction is None:
            s = np.sqrt(float(diff @ diff) + 1e-18)
            spread, dspread = s, dq @ (diff / s)
        else:
            spread, dspread = float(direction @ diff), dq @ direction
        return -(spread + k_explore * mu), -(dspread + k_explore * dmu)


def _theta_bounds(engine: _ChartEngine):
    bounds = [(0.0, 2.0)] * engine.nlam
    if engine.has_phi:
        bounds.append((None, None))
    bounds.extend([(None, None)] * 9)
    return bounds


def _random_theta(cls: str, rng: np.random.Generator) -> np.ndarray:
    nlam = 5 if cls == "ghz" else 4
    x = np.abs(rng.normal(size=nlam))
    x /= np.linalg.norm(x)
    parts = [x]
    if cls == "ghz":
        parts.append(rng.uniform(0.0, 2.0 * np.pi, size=1))
    parts.append(rng.uniform(0.0, 2.0 * np.pi, size=9))
    return np.concatenate(parts)


def _theta_from_params(params: SchmidtParams) -> np.ndarray:
    lam = np.asarray(params.lambdas)
    nlam = 5 if params.cls == "ghz" else 4
    parts = [lam[:nlam]]
    if params.cls == "ghz":
        parts.append([params.phi])
    parts.append(np.asarray(params.angles).ravel())
    return np.concatenate(parts)


def _params_from_theta(cls: str, theta: np.ndarray) -> SchmidtParams:
    nlam = 5 if cls == "ghz" else 4
    x = np.clip(theta[:nlam], 0.0, None)
    lam = np.zeros(5)
    lam[:nlam] = x / np.linalg.norm(x)
    phi = float(theta[nlam]) % (2.0 * np.pi) if cls == "ghz" else 0.0
    ang = theta[-9:].reshape(3, 3)
    return SchmidtParams(cls, tuple(lam), phi, tuple(map(tuple, ang)))


def _minimize(fun, theta0, bounds, cfg: InnerConfig, args=()):
    return scipy.optimize.minimize(
        fun, theta0, args=args, jac=True, method="L-BFGS-B", bounds=bounds,
        options={"maxiter": cfg.maxiter, "ftol": cfg.ftol, "gtol": cfg.gtol, "maxcor": 12})


def _pi_coords(pi, basis: SymBasis) -> np.ndarray:
    """Accept an operator as commutant coordinates, a wrapper, or a raw matrix."""
    arr = pi.mat if isinstance(pi, HermitianOp) else np.asarray(pi)
    if arr.ndim == 1:
        return np.asarray(arr, dtype=float)
    return basis.vectorize(mat_of(pi), check=True)


def _exact_candidate(cls: str, theta: np.ndarray, pi_mat: np.ndarray,
                     basis: SymBasis) -> Candidate:
    """Re-verify a solver output through the independent state constructors."""
    params = _params_from_theta(cls, theta)
    psi = schmidt_state(params)
    e_val = t3_schmidt(params)
    mu = expval(pi_mat, psi) - e_val
    return Candidate(params, basis.coords_of_state(psi), e_val, mu)


def dedup_insert(found: list, cand: Candidate, tol: float) -> bool:
    """Insert keeping one representative per image point; True if new.

    Keyed on (coordinates, tangle value) only: both charts can reach the same
    image point and such duplicates must merge.
    """
    for i, other in enumerate(found):
        if np.max(np.abs(other.q - cand.q)) < tol and abs(other.e_value - cand.e_value) < tol:
            if cand.mu > other.mu:
                found[i] = cand
            return False
    found.append(cand)
    return True


def build_candidate_set(found: list, cfg: InnerConfig) -> CandidateSet:
    ordered = sorted(found, key=lambda c: -c.mu)[: cfg.max_keep]
    mu_pi = ordered[0].mu
    stamped = [replace(c, f_gap=mu_pi - c.mu) for c in ordered]
    members = tuple(c for c in stamped if c.f_gap <= cfg.tol)
    extras = tuple(c for c in stamped if c.f_gap > cfg.tol)
    return CandidateSet(mu_pi, cfg.tol, members, extras)


def inner_minimize(pi, basis: SymBasis, cfg: InnerConfig,
                   rng: np.random.Generator | None = None, warm=()) -> CandidateSet:
    """Maximize the advantage over both charts with multistart plus warm starts.

    pi may be commutant coordinates, a HermitianOp, or a raw matrix in the
    basis span. Every solver output is re-verified by rebuilding the state
    independently and evaluating the advantage directly.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    v = _pi_coords(pi, basis)
    pi_mat = basis.devectorize(v)
    engines = {cls: _ChartEngine(pi_mat, cls) for cls in ("ghz", "w")}
    found: list[Candidate] = []
    failures = 0

    def run(cls, theta0):
        nonlocal failures
        eng = engines[cls]
        res = _minimize(eng.neg_mu, theta0, _theta_bounds(eng), cfg)
        if not res.success and res.status != 1:   # status 1 = hit maxiter, still usable
            failures += 1
        dedup_insert(found, _exact_candidate(cls, res.x, pi_mat, basis), cfg.dedup_tol)

    n_runs = 0
    for params in warm:
        run(params.cls, _theta_from_params(params))
        n_runs += 1
    for _ in range(cfg.n_ghz):
        run("ghz", _random_theta("ghz", rng))
        n_runs += 1
    for _ in range(cfg.n_w):
        run("w", _random_theta("w", rng))
        n_runs += 1
    if failures == n_runs:
        raise NumericalError("every inner solver failed", partial=found)
    return build_candidate_set(found, cfg)


def refine_candidates(pi, basis: SymBasis, params_seq, cfg: InnerConfig) -> list:
    """Re-solve the advantage maximization warm-started from given charts only.

    No random starts: each parameter set is polished against the supplied
    witness with the configured solver tolerances. Returns the deduplicated
    candidates in input order.
    """
    v = _pi_coords(pi, basis)
    pi_mat = basis.devectorize(v)
    engines = {cls: _ChartEngine(pi_mat, cls) for cls in ("ghz", "w")}
    found: list[Candidate] = []
    for params in params_seq:
        eng = engines[params.cls]
        res = _minimize(eng.neg_mu, _theta_from_params(params), _theta_bounds(eng), cfg)
        dedup_insert(found, _exact_candidate(params.cls, res.x, pi_mat, basis),
                     cfg.dedup_tol)
    return found


def explore_candidates(pi, basis: SymBasis, cset: CandidateSet, cfg: InnerConfig,
                       rng: np.random.Generator | None = None, *,
                       k_explore: float = 1e3, direction: np.ndarray | None = None,
                       n_starts: int = 8, perturb: float = 0.3) -> CandidateSet:
    """Hunt for additional advantage maximizers with distinct image points.

    Restarts near current members and maximizes a spread-plus-advantage
    objective. Finds whose re-verified advantage lands inside the band are
    admitted; a strictly better advantage replaces the best and the band
    is re-filtered around it.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    v = _pi_coords(pi, basis)
    pi_mat = basis.devectorize(v)
    engines = {cls: _ChartEngine(pi_mat, cls, basis.ops) for cls in ("ghz", "w")}
    refs = list(cset.members[:3])
    pool = list(cset.all_candidates)
    for i in range(n_starts):
        ref = refs[i % len(refs)]
        chart = ref.params.cls
        eng = engines[chart]
        theta0 = _theta_from_params(ref.params) + rng.normal(size=eng.dim_theta) * perturb
        theta0[: eng.nlam] = np.clip(np.abs(theta0[: eng.nlam]), 1e-3, 2.0)
        res = _minimize(eng.neg_explore, theta0, _theta_bounds(eng), cfg,
                        args=(ref.q, k_explore, direction))
        cand = _exact_candidate(chart, res.x, pi_mat, basis)
        if cand.mu >= cset.mu_pi - cfg.tol:
            dedup_insert(pool, cand, cfg.dedup_tol)
    return build_candidate_set(pool, cfg)
