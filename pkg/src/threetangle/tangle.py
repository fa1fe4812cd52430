"""Residual tripartite entanglement of three-qubit pure states.

The degree-4 invariant is Cayley's hyperdeterminant of the 2x2x2
amplitude tensor. For a normalized state the tangle is four times its
modulus; this package works throughout with the square root of the
tangle, which is the convex-roof-friendly homogeneous version.
"""

from __future__ import annotations

import numpy as np

from .linalg import vec_of
from .states import SchmidtParams


def hdet(t) -> complex:
    """Cayley hyperdeterminant of amplitudes t indexed by |q1 q2 q3>.

    Accepts a single length-8 vector or a stack shaped (..., 8); the
    polynomial is applied along the last axis. Complex dtypes are kept
    as given so callers can evaluate in extended precision.
    """
    a = np.asarray(t)
    if not np.iscomplexobj(a):
        a = a.astype(complex)
    t000, t001, t010, t011 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    t100, t101, t110, t111 = a[..., 4], a[..., 5], a[..., 6], a[..., 7]
    d1 = (t000 ** 2) * (t111 ** 2) + (t001 ** 2) * (t110 ** 2) \
        + (t010 ** 2) * (t101 ** 2) + (t100 ** 2) * (t011 ** 2)
    d2 = t000 * t111 * t011 * t100 + t000 * t111 * t101 * t010 \
        + t000 * t111 * t110 * t001 + t011 * t100 * t101 * t010 \
        + t011 * t100 * t110 * t001 + t101 * t010 * t110 * t001
    d3 = t000 * t110 * t101 * t011 + t111 * t001 * t010 * t100
    return d1 - 2.0 * d2 + 4.0 * d3


def hdet_grad(t):
    """hdet values and holomorphic partials for a stack shaped (..., 8)."""
    a = np.asarray(t)
    if not np.iscomplexobj(a):
        a = a.astype(complex)
    t000, t001, t010, t011 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    t100, t101, t110, t111 = a[..., 4], a[..., 5], a[..., 6], a[..., 7]
    h = hdet(a)
    g = np.empty_like(a)
    g[..., 0] = 2.0 * t000 * t111 ** 2 \
        - 2.0 * (t111 * t011 * t100 + t111 * t101 * t010 + t111 * t110 * t001) \
        + 4.0 * t110 * t101 * t011
    g[..., 7] = 2.0 * t111 * t000 ** 2 \
        - 2.0 * (t000 * t011 * t100 + t000 * t101 * t010 + t000 * t110 * t001) \
        + 4.0 * t001 * t010 * t100
    g[..., 1] = 2.0 * t001 * t110 ** 2 \
        - 2.0 * (t000 * t111 * t110 + t011 * t100 * t110 + t101 * t010 * t110) \
        + 4.0 * t111 * t010 * t100
    g[..., 6] = 2.0 * t110 * t001 ** 2 \
        - 2.0 * (t000 * t111 * t001 + t011 * t100 * t001 + t101 * t010 * t001) \
        + 4.0 * t000 * t101 * t011
    g[..., 2] = 2.0 * t010 * t101 ** 2 \
        - 2.0 * (t000 * t111 * t101 + t011 * t100 * t101 + t101 * t110 * t001) \
        + 4.0 * t111 * t001 * t100
    g[..., 5] = 2.0 * t101 * t010 ** 2 \
        - 2.0 * (t000 * t111 * t010 + t011 * t100 * t010 + t010 * t110 * t001) \
        + 4.0 * t000 * t110 * t011
    g[..., 3] = 2.0 * t011 * t100 ** 2 \
        - 2.0 * (t000 * t111 * t100 + t100 * t101 * t010 + t100 * t110 * t001) \
        + 4.0 * t000 * t110 * t101
    g[..., 4] = 2.0 * t100 * t011 ** 2 \
        - 2.0 * (t000 * t111 * t011 + t011 * t101 * t010 + t011 * t110 * t001) \
        + 4.0 * t111 * t001 * t010
    return h, g


def tau3(psi) -> float:
    """Tangle of a pure state: 4 |hdet|. Homogeneous of degree 4 in the amplitudes.

    Evaluated in extended precision: the polynomial cancels to zero on the
    whole W class, and float64 dust there would blow up under the square
    root taken by t3_pure.
    """
    amps = np.asarray(vec_of(psi), dtype=np.clongdouble)
    return float(4.0 * np.abs(hdet(amps)))


# Hyperdeterminant magnitudes below this (for unit-norm amplitudes) are
# indistinguishable from the rounding of the amplitudes themselves, so the
# square root would amplify pure noise. Scaled by the degree-4 homogeneity.
_HDET_NOISE_FLOOR = 1e-13


def t3_pure(psi) -> float:
    """Square-root tangle of a pure state; homogeneous of degree 2.

    Values whose hyperdeterminant sits below the amplitude-rounding noise
    floor are reported as exactly 0; without this, every W-class state
    assembled in floating point would read as ~1e-8 instead of 0.
    """
    amps = np.asarray(vec_of(psi), dtype=np.clongdouble)
    habs = float(np.abs(hdet(amps)))
    scale2 = float(np.abs(amps @ amps.conj()))
    if habs < _HDET_NOISE_FLOOR * scale2 * scale2:
        return 0.0
    return float(np.sqrt(4.0 * habs))


def t3_schmidt(params: SchmidtParams) -> float:
    """Square-root tangle in the Schmidt chart: 2 lambda0 lambda4 (zero on the 'w' chart)."""
    if params.cls == "w":
        return 0.0
    lam = params.lambdas
    return float(2.0 * lam[0] * lam[4])
