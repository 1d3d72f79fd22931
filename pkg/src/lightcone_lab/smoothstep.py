"""Smooth step from the standard bump quotient, with exact derivatives.

The step is xi(x) = b(1-x) / (b(x) + b(1-x)) with b(x) = exp(-1/x) for x > 0
and b(x) = 0 otherwise.  It equals 1 for x <= 0, 0 for x >= 1, decreases
monotonically in between, and is C-infinity.  Derivatives of any order are
evaluated in closed form through the recursion

    b^(k)(x) = b(x) * P_k(1/x),   P_0 = 1,   P_{k+1}(u) = u^2 (P_k(u) - P_k'(u)),

combined with the Leibniz rule applied to xi * (b + b(1 - .)) = b(1 - .).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

# below this x the bump is ~exp(-1000); treat it and all derivatives as zero
_BUMP_FLOOR = 1e-3


@lru_cache(maxsize=None)
def _bump_poly(k: int) -> np.polynomial.Polynomial:
    """Polynomial P_k with b^(k)(x) = b(x) P_k(1/x)."""
    if k == 0:
        return np.polynomial.Polynomial([1.0])
    p = _bump_poly(k - 1)
    u2 = np.polynomial.Polynomial([0.0, 0.0, 1.0])
    return u2 * (p - p.deriv())


def bump(x: float) -> float:
    return math.exp(-1.0 / x) if x > _BUMP_FLOOR else 0.0


def bump_derivatives(x: float, kmax: int) -> np.ndarray:
    """[b(x), b'(x), ..., b^(kmax)(x)]."""
    out = np.zeros(kmax + 1)
    if x <= _BUMP_FLOOR:
        return out
    b = math.exp(-1.0 / x)
    u = 1.0 / x
    for k in range(kmax + 1):
        out[k] = b * _bump_poly(k)(u)
    return out


def smoothstep(x) -> np.ndarray | float:
    """xi(x): 1 on (-inf, 0], 0 on [1, inf), strictly decreasing between."""
    arr = np.asarray(x, dtype=float)
    out = np.where(arr <= 0.0, 1.0, 0.0)
    mid = (arr > 0.0) & (arr < 1.0)
    if np.any(mid):
        xm = arr[mid]
        bn = np.array([bump(1.0 - v) for v in xm])
        bd = np.array([bump(v) for v in xm]) + bn
        out = out.astype(float)
        out[mid] = bn / bd
    return float(out) if np.isscalar(x) else out


def smoothstep_derivatives(x: float, kmax: int) -> np.ndarray:
    """[xi(x), xi'(x), ..., xi^(kmax)(x)], exact up to roundoff."""
    out = np.zeros(kmax + 1)
    if x <= 0.0:
        out[0] = 1.0
        return out
    if x >= 1.0:
        return out
    bx = bump_derivatives(x, kmax)
    # d^k/dx^k b(1-x) = (-1)^k b^(k)(1-x)
    b1x = bump_derivatives(1.0 - x, kmax)
    signs = (-1.0) ** np.arange(kmax + 1)
    num = signs * b1x                      # derivatives of N = b(1-x)
    den = bx + signs * b1x                 # derivatives of D = b(x) + b(1-x)
    # Leibniz: N^(k) = sum_j C(k,j) xi^(j) D^(k-j)  =>  solve for xi^(k)
    for k in range(kmax + 1):
        acc = num[k]
        for j in range(k):
            acc -= math.comb(k, j) * out[j] * den[k - j]
        out[k] = acc / den[0]
    return out


def smoothstep_sup_norms(kmax: int, samples: int = 4001) -> np.ndarray:
    """sup norms of xi^(k) for k = 0..kmax, by dense sampling of (0, 1)."""
    xs = np.linspace(0.0, 1.0, samples + 2)[1:-1]
    sups = np.zeros(kmax + 1)
    for x in xs:
        d = np.abs(smoothstep_derivatives(float(x), kmax))
        sups = np.maximum(sups, d)
    sups[0] = 1.0  # attained on (-inf, 0]
    return sups
