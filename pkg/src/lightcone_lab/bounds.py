"""Evaluators for every explicit expression on the bound side.

Covers the weighted derivative norms and their closed-form dominating bound
for the smooth energy window, the decay-of-convolutions check, the time-moment
inequality, the interaction kernel, the iterated series terms with their
odd-double-factorial denominators, and the many-body time envelope.

Constants the underlying estimates leave implicit are *fitted*: each check
reports the smallest constant that makes its inequality hold over the sweep.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DivergenceError, HypothesisError, ParameterError, ShapeError
from .grids import (
    Grid,
    GridFunction,
    bracket,
    decay_envelope,
    periodic_convolve,
    reflect,
)
from .onebody import OneBodyOperator

QUAD_REL_TOL = 1e-8
QUAD_ABS_TOL = 1e-12


@dataclass(frozen=True)
class BoundParams:
    """The full constant bundle feeding the envelope and series evaluators.

    n is the decay exponent; it must respect n <= min(n_V / 2, n_W) where n_V
    counts bounded derivatives of the potential and n_W is the interaction
    decay power.  The onebody/manybody/kernel/smearing constants are fitted
    from sweeps or supplied by the caller.
    """

    n: int
    delta: float
    sigma: float
    alpha: float
    n_V: int
    n_W: int
    c_W: float
    W_l1: float
    C_ob0: float = 1.0
    C_ob1: float = 1.0
    C_nW: float = 1.0
    C_phi: float = 1.0
    C_mb1: float = 1.0
    C_mb2: float = 1.0

    def __post_init__(self) -> None:
        if self.n > min(self.n_V / 2, self.n_W):
            raise HypothesisError(
                f"n={self.n} violates n <= min(n_V/2, n_W) = "
                f"{min(self.n_V / 2, self.n_W)}"
            )
        for name in ("delta", "sigma", "c_W", "W_l1", "C_ob0", "C_ob1",
                     "C_nW", "C_phi", "C_mb1", "C_mb2"):
            if not (getattr(self, name) > 0):
                raise ParameterError(f"{name} must be positive")
        if not (self.alpha > 1):
            raise ParameterError("alpha must exceed 1")
        if self.n < 1:
            raise ParameterError("n must be a positive integer")

    def with_derived_mb_constants(self, phi_l2: float) -> "BoundParams":
        """Resum the series prefactors into the many-body envelope constants."""
        return replace(
            self,
            C_mb1=2.0 * self.C_ob0**2 * self.C_nW,
            C_mb2=self.C_ob0 * self.C_nW * self.C_phi * phi_l2**4,
        )


@dataclass(frozen=True)
class InteractionSpec:
    """Pair interaction profile with its fitted decay envelope parameters."""

    profile: Callable[[np.ndarray], np.ndarray]
    c_W: float
    n_W: int
    lambda_mask: np.ndarray | None = None

    def sample(self, grid: Grid) -> GridFunction:
        """W evaluated at the periodic displacement from the origin."""
        r = grid.distances_to((0.0,) * grid.dimension)
        return GridFunction(grid, np.asarray(self.profile(r), dtype=complex))

    def check_hypothesis(self, grid: Grid) -> None:
        """|W| <= c_W (1 ^ 1/|x|)^n_W and evenness on the sampled grid."""
        w = self.sample(grid)
        r = grid.distances_to((0.0,) * grid.dimension)
        envelope = self.c_W * np.minimum(1.0, 1.0 / np.maximum(r, 1e-300)) ** self.n_W
        if np.any(np.abs(w.values) > envelope * (1 + 1e-12) + 1e-300):
            raise HypothesisError("interaction exceeds its declared decay envelope")
        mirrored = reflect(w)
        if np.abs(w.values - mirrored.values).max() > 1e-12 * max(1.0, w.linf_norm()):
            raise HypothesisError("interaction is not even")


# ---------------------------------------------------------------------------
# Weighted derivative norms (smooth-function calculus)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothFunctionSpec:
    """Derivative table of a smooth function for the weighted norms.

    derivatives[k](x) evaluates the k-th derivative pointwise; when all
    derivatives of order >= 1 vanish outside a finite interval, pass it as
    derivative_support so the quadrature concentrates there.
    """

    derivatives: Sequence[Callable[[float], float]]
    derivative_support: tuple[float, float] | None = None
    decays_at_infinity: bool = False


def weighted_derivative_norm(spec: SmoothFunctionSpec, n: int, p: float) -> float:
    """sum_{k=0}^{n+2} int <x>^(k-p-1) |f^(k)(x)| dx by adaptive quadrature."""
    if len(spec.derivatives) < n + 3:
        raise ParameterError(f"need derivatives up to order {n + 2}")
    total = 0.0
    for k in range(n + 3):
        fk = spec.derivatives[k]
        weight_pow = k - p - 1
        compact = k >= 1 and spec.derivative_support is not None
        if not compact and not spec.decays_at_infinity and weight_pow >= -1:
            raise DivergenceError(
                f"term k={k} does not converge: <x>^{weight_pow} against a "
                "non-decaying function (p too small for non-compact support)"
            )
        integrand = lambda x, fk=fk, w=weight_pow: (1 + x * x) ** (w / 2) * abs(fk(x))
        if compact:
            lo, hi = spec.derivative_support
            val, _ = integrate.quad(
                integrand, lo, hi, epsrel=QUAD_REL_TOL, epsabs=QUAD_ABS_TOL, limit=400
            )
        else:
            pieces = []
            if spec.derivative_support is not None:
                lo, hi = spec.derivative_support
                for a, b in ((-np.inf, lo), (lo, hi), (hi, np.inf)):
                    v, _ = integrate.quad(
                        integrand, a, b, epsrel=QUAD_REL_TOL, epsabs=QUAD_ABS_TOL, limit=400
                    )
                    pieces.append(v)
            else:
                v, _ = integrate.quad(
                    integrand, -np.inf, np.inf,
                    epsrel=QUAD_REL_TOL, epsabs=QUAD_ABS_TOL, limit=400,
                )
                pieces.append(v)
            val = sum(pieces)
        total += val
    return total


@dataclass(frozen=True)
class NormCalculator:
    """Weighted-norm evaluator with a pinned quadrature resolution."""

    n: int
    p: float
    rel_tol: float = QUAD_REL_TOL

    def evaluate(self, spec: SmoothFunctionSpec) -> float:
        return weighted_derivative_norm(spec, self.n, self.p)


def power_weight_integral(k: float) -> float:
    """int <x>^(-k-1) dx over the line; finite exactly for k > 0."""
    if k <= 0:
        raise DivergenceError(f"integral diverges for k={k} <= 0")
    val, _ = integrate.quad(
        lambda x: (1 + x * x) ** (-(k + 1) / 2),
        -np.inf,
        np.inf,
        epsrel=QUAD_REL_TOL,
        epsabs=QUAD_ABS_TOL,
        limit=400,
    )
    return float(val)


def cutoff_norm_bound(
    xi_sup_norms: Sequence[float], alpha: float, E: float, n: int, p: float
) -> float:
    """Closed-form dominating bound for the weighted norm of the energy window.

    Evaluates, with s_k the sup norm of the k-th step derivative and cp the
    smallest integer >= p,

        iota_p s_0 + sum_{k=1}^{cp} s_k / ((alpha-1) E)^(k-1)
        + sum_{k=cp+1}^{n+2} (alpha/(alpha-1))^(k-1) <E>^(k-p-1) / E^(k-1) s_k.
    """
    if len(xi_sup_norms) < n + 3:
        raise ParameterError(f"need sup norms up to order {n + 2}")
    if not (E > 0 and p > 0):
        raise ParameterError("E and p must be positive")
    cp = math.ceil(p)
    total = power_weight_integral(p) * xi_sup_norms[0]
    for k in range(1, min(cp, n + 2) + 1):
        total += xi_sup_norms[k] / ((alpha - 1) * E) ** (k - 1)
    for k in range(cp + 1, n + 3):
        total += (
            (alpha / (alpha - 1)) ** (k - 1)
            * bracket(E) ** (k - p - 1)
            / E ** (k - 1)
            * xi_sup_norms[k]
        )
    return float(total)


# ---------------------------------------------------------------------------
# Convolution decay and the time-moment inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvolutionFit:
    fitted_c: float
    passed: bool
    max_abs_x: float


def convolution_decay_check(
    c_f: float,
    n: int,
    alpha: float,
    c_g: float,
    m: int,
    beta: float,
    dimension: int = 1,
    box_length: float = 128.0,
    points: int = 2048,
    cap: float | None = None,
) -> ConvolutionFit:
    """Convolve two polynomially decaying envelopes and fit the decay constant.

    Verifies |f*g|(x) <= c * c_f c_g (alpha^beta min)^-d (1 v min(alpha,beta)|x|)^-(m^n)
    and reports the smallest working c over |x| <= box/4 (beyond that the
    periodic wrap contaminates the tails).
    """
    if m <= dimension or n <= dimension:
        raise HypothesisError("convolution decay requires m, n > dimension")
    grid = Grid(dimension, points, box_length)
    r = grid.distances_to((0.0,) * dimension)
    f = GridFunction(grid, c_f * np.minimum(1.0, 1.0 / np.maximum(alpha * r, 1e-300)) ** n)
    g = GridFunction(grid, c_g * np.minimum(1.0, 1.0 / np.maximum(beta * r, 1e-300)) ** m)
    conv = periodic_convolve(f, g)
    ab = min(alpha, beta)
    envelope = (
        c_f * c_g * ab ** (-dimension)
        * np.minimum(1.0, 1.0 / np.maximum(ab * r, 1e-300)) ** min(m, n)
    )
    sel = r <= box_length / 4
    ratios = np.abs(conv.values[sel]) / envelope[sel]
    fitted = float(ratios.max())
    passed = math.isfinite(fitted) and (cap is None or fitted <= cap)
    return ConvolutionFit(fitted_c=fitted, passed=passed, max_abs_x=float(r[sel].max()))


def time_moment_inequality_check(
    alpha: float, beta: float, k: int, t_grid: Sequence[float]
) -> tuple[bool, float]:
    """Check int_0^t <t-s>^alpha <s>^beta s^k ds <= <t>^(alpha+beta) t^(k+1)/(k+1).

    Returns (all_pass, max_ratio); the ratio tends to 1 as t -> 0, so a
    quadrature-level slack is allowed.
    """
    if alpha <= 0 or beta <= 0 or k < 0:
        raise ParameterError("need alpha, beta > 0 and k >= 0")
    worst = 0.0
    for t in t_grid:
        if t <= 0:
            continue
        lhs, _ = integrate.quad(
            lambda s: bracket(t - s) ** alpha * bracket(s) ** beta * s**k,
            0.0,
            t,
            epsrel=QUAD_REL_TOL,
            epsabs=QUAD_ABS_TOL,
            limit=400,
        )
        rhs = bracket(t) ** (alpha + beta) * t ** (k + 1) / (k + 1)
        worst = max(worst, lhs / rhs)
    return worst <= 1.0 + 1e-9, worst


# ---------------------------------------------------------------------------
# Interaction kernel and envelopes
# ---------------------------------------------------------------------------

def overlap_field(T: OneBodyOperator, f: GridFunction, phi: GridFunction, t: float) -> GridFunction:
    """x -> <e^{-itT} f, phi_x> for every grid center x, via FFT correlation."""
    evolved = T.propagate(f, t)
    conj = GridFunction(T.grid, np.conj(evolved.values))
    return periodic_convolve(conj, reflect(phi))


def interaction_kernel(
    T: OneBodyOperator,
    f: GridFunction,
    W: InteractionSpec,
    phi: GridFunction,
    t: float,
) -> GridFunction:
    """||W||_1 |<e^{-itT}f, phi_x>| + (|W| * |<e^{-itT}f, phi_.>|)(x) on the grid."""
    overlaps = overlap_field(T, f, phi, t)
    abs_overlaps = GridFunction(T.grid, np.abs(overlaps.values))
    w = W.sample(T.grid)
    w_abs = GridFunction(T.grid, np.abs(w.values))
    tail = periodic_convolve(w_abs, abs_overlaps)
    vals = w.l1_norm() * abs_overlaps.values + np.abs(tail.values)
    return GridFunction(T.grid, vals)


def manybody_time_envelope(t: float, params: BoundParams, dimension: int) -> float:
    """C1 |t| <t>^(2(1+2 delta+d)) exp(C2 <t>^(1+2 delta+3d) t^2); saturates to inf."""
    tb = bracket(t)
    exponent = params.C_mb2 * tb ** (1 + 2 * params.delta + 3 * dimension) * t * t
    if exponent > 700.0:
        warnings.warn("many-body envelope overflow; bound is vacuous", RuntimeWarning)
        return math.inf
    return (
        params.C_mb1
        * abs(t)
        * tb ** (2 * (1 + 2 * params.delta + dimension))
        * math.exp(exponent)
    )


def pair_envelope_integral(f: GridFunction, g: GridFunction, n: int, t: float) -> float:
    """Double integral of G_{n,t}(x-y) |f(x)|^2 |g(y)|^2 over the torus.

    Computed both as a direct double Riemann sum and through the FFT
    convolution path; the two must agree to 1e-10 relative.
    """
    if f.grid != g.grid:
        raise ShapeError("grid mismatch")
    grid = f.grid
    envelope = decay_envelope(n, t, grid.distances_to((0.0,) * grid.dimension))
    g2 = GridFunction(grid, np.abs(g.values) ** 2)
    conv = periodic_convolve(GridFunction(grid, envelope), g2)
    via_conv = float(
        np.real((np.abs(f.values) ** 2 * conv.values).sum()) * grid.cell_volume
    )
    # direct double sum, chunked over the first index
    f2 = np.abs(f.values) ** 2
    gv2 = np.abs(g.values) ** 2
    coords = grid.coordinates()
    total = 0.0
    chunk = max(1, 2**22 // max(grid.size, 1))
    for start in range(0, grid.size, chunk):
        block = coords[start : start + chunk]
        d = grid.wrap(block[:, None, :] - coords[None, :, :])
        dist = np.sqrt((d**2).sum(axis=2))
        total += float(
            (f2[start : start + chunk, None] * decay_envelope(n, t, dist) * gv2[None, :]).sum()
        )
    direct = total * grid.cell_volume**2
    scale = max(abs(direct), abs(via_conv), 1e-300)
    if abs(direct - via_conv) > 1e-10 * scale:
        raise ArithmeticError(
            f"double-sum and convolution paths disagree: {direct} vs {via_conv}"
        )
    return via_conv


def envelope_total_integral(n: int, t: float, dimension: int) -> float:
    """int G_{n,t} over R^d (radial quadrature); needs n > dimension."""
    if n <= dimension:
        raise HypothesisError("total envelope integral requires n > dimension")
    tb = bracket(t)
    if dimension == 1:
        tail, _ = integrate.quad(lambda r: (tb / r) ** n, tb, np.inf, epsrel=QUAD_REL_TOL)
        return 2 * tb + 2 * tail
    tail, _ = integrate.quad(lambda r: (tb / r) ** n * r, tb, np.inf, epsrel=QUAD_REL_TOL)
    return math.pi * tb**2 + 2 * math.pi * tail


@dataclass(frozen=True)
class SeriesTerms:
    """Upper bounds for the iterated Duhamel series and remainders."""

    order: list[int]
    main_terms: list[float]           # S_k, k = 1..k_max
    remainders: list[float]           # R_N, N = 1..k_max
    converged: bool
    ratio_decay_index: int | None     # first k with S_{k+1}/S_k < 1


def odd_double_factorial(k: int) -> int:
    """1 * 3 * ... * (2k - 1)."""
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out


def iteration_series_terms(
    k_max: int,
    t: float,
    params: BoundParams,
    phi_l2: float,
    f: GridFunction,
    g: GridFunction,
    dimension: int,
) -> SeriesTerms:
    """Evaluate the displayed S_k and R_N upper-bound formulas.

    S_k carries (C_ob0)^(k+1) C_nW^k C_phi^(k-1) ||phi||^(4k) 2^k
    <t>^((1+2d')(k+1)+d(3k-1)) t^(2k-1) / (2k-1)!! times the pair envelope;
    R_N carries the crude 36 ||g||^2 prefactor and the total envelope mass.
    """
    if k_max > 40:
        raise ParameterError("k_max capped at 40 (factorial denominators)")
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    d = dimension
    dlt = params.delta
    tb = bracket(t)
    env_fg = pair_envelope_integral(f, g, params.n, t)
    env_total = envelope_total_integral(params.n, t, d) * f.l2_norm() ** 2
    s_terms, r_terms = [], []
    for k in range(1, k_max + 1):
        s = (
            params.C_ob0 ** (k + 1)
            * params.C_nW**k
            * params.C_phi ** (k - 1)
            * phi_l2 ** (4 * k)
            * 2**k
            * tb ** ((1 + 2 * dlt) * (k + 1) + d * (3 * k - 1))
            * abs(t) ** (2 * k - 1)
            / odd_double_factorial(k)
            * env_fg
        )
        s_terms.append(s)
        r = (
            36.0
            * g.l2_norm() ** 2
            * (params.C_nW * params.C_ob0) ** (k + 1)
            * params.C_phi ** (k - 1)
            * phi_l2 ** (4 * k)
            * 2**k
            * tb ** ((1 + dlt) * (k + 1) + d * (2 * k - 1))
            * abs(t) ** (2 * k - 1)
            / odd_double_factorial(k)
            * env_total
        )
        r_terms.append(r)
    ratio_index = None
    for k in range(len(s_terms) - 1):
        if s_terms[k] > 0 and s_terms[k + 1] / s_terms[k] < 1.0:
            ratio_index = k + 1
            break
    converged = ratio_index is not None or all(s == 0.0 for s in s_terms)
    if not converged:
        warnings.warn(
            "series terms are still growing at k_max; horizon too short", RuntimeWarning
        )
    return SeriesTerms(
        order=list(range(1, k_max + 1)),
        main_terms=s_terms,
        remainders=r_terms,
        converged=converged,
        ratio_decay_index=ratio_index,
    )
