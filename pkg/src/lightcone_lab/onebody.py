"""Discretized one-body Schroedinger operator and its propagation diagnostics.

The kinetic part is the spectral (Fourier-multiplier) Laplacian kappa |p|^2;
grids up to DENSE_EIG_CAP states get a cached dense eigendecomposition which
backs the unitary propagator, smooth energy cutoffs and operator norms.
Larger grids fall back to split-step propagation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ModelError, ParameterError, ShapeError
from .grids import Grid, GridFunction, SmearingFunction, bracket, decay_envelope
from .smoothstep import smoothstep, smoothstep_derivatives

DENSE_EIG_CAP = 4096
POWER_ITERATIONS = 200
POWER_TOL = 1e-8


@dataclass(frozen=True)
class EnergyCutoff:
    """Smooth spectral window: 1 up to E, 0 beyond alpha*E."""

    E: float
    alpha: float

    def __post_init__(self) -> None:
        if not (self.E > 0):
            raise ParameterError(f"E must be positive, got {self.E}")
        if not (self.alpha > 1):
            raise ParameterError(f"alpha must exceed 1, got {self.alpha}")

    def __call__(self, x) -> np.ndarray | float:
        return smoothstep((np.asarray(x, dtype=float) - self.E) / ((self.alpha - 1) * self.E))

    def derivatives(self, x: float, kmax: int) -> np.ndarray:
        """Derivatives of the window at x, orders 0..kmax."""
        scale = (self.alpha - 1) * self.E
        d = smoothstep_derivatives((x - self.E) / scale, kmax)
        return d / scale ** np.arange(kmax + 1)

    def derivative_support(self) -> tuple[float, float]:
        return (self.E, self.alpha * self.E)


class OneBodyOperator:
    """T = kappa * |p|^2 + V on a periodic grid, with cached eigenpairs."""

    def __init__(self, grid: Grid, kappa: float, potential: GridFunction):
        if potential.grid != grid:
            raise ShapeError("potential lives on a different grid")
        if np.abs(potential.values.imag).max(initial=0.0) > 1e-14:
            raise ModelError("potential must be real-valued")
        if kappa not in (0.5, 1.0):
            raise ParameterError(f"kinetic coefficient must be 1/2 or 1, got {kappa}")
        self.grid = grid
        self.kappa = float(kappa)
        self.potential = potential
        self._multiplier = kappa * grid.momentum_squared()
        self._dense: np.ndarray | None = None
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    # -- dense path -------------------------------------------------------
    def dense(self) -> np.ndarray:
        if self._dense is None:
            n = self.grid.size
            if n > DENSE_EIG_CAP:
                raise CapacityError(
                    f"grid has {n} > {DENSE_EIG_CAP} states; only split-step is available"
                )
            shape = self.grid.shape
            axes = tuple(range(1, self.grid.dimension + 1))
            basis = np.eye(n, dtype=complex).reshape((n,) + shape)
            hat = np.fft.fftn(basis, axes=axes).reshape(n, n)
            hat *= self._multiplier[None, :]
            kin = np.fft.ifftn(hat.reshape((n,) + shape), axes=axes).reshape(n, n).T
            mat = kin + np.diag(self.potential.values.real)
            self._dense = (mat + mat.conj().T) / 2
        return self._dense

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            vals, vecs = np.linalg.eigh(self.dense())
            self._eig = (vals, vecs)
        return self._eig

    # -- application without dense assembly --------------------------------
    def apply(self, f: GridFunction) -> GridFunction:
        self._check_grid(f)
        v = f.reshaped()
        kin = np.fft.ifftn(self._multiplier.reshape(self.grid.shape) * np.fft.fftn(v))
        return GridFunction(self.grid, kin.ravel() + self.potential.values.real * f.values)

    def _check_grid(self, f: GridFunction) -> None:
        if f.grid != self.grid:
            raise ShapeError("function lives on a different grid")

    # -- propagation --------------------------------------------------------
    def propagate(
        self,
        f: GridFunction,
        t: float,
        method: str = "spectral",
        dt: float | None = None,
    ) -> GridFunction:
        """e^{-i t T} f via the cached eigenbasis or symmetric Strang splitting."""
        self._check_grid(f)
        if t == 0.0:
            return f
        if method == "spectral":
            vals, vecs = self.eigensystem()
            coeffs = vecs.conj().T @ f.values
            return GridFunction(self.grid, vecs @ (np.exp(-1j * vals * t) * coeffs))
        if method == "splitstep":
            if dt is None or dt <= 0:
                raise ParameterError("splitstep requires dt > 0")
            steps = max(1, int(math.ceil(abs(t) / dt)))
            step = t / steps
            half_pot = np.exp(-1j * self.potential.values.real * step / 2)
            kin = np.exp(-1j * self._multiplier * step).reshape(self.grid.shape)
            v = f.values.copy()
            shape = self.grid.shape
            for _ in range(steps):
                v = half_pot * v
                v = np.fft.ifftn(kin * np.fft.fftn(v.reshape(shape))).ravel()
                v = half_pot * v
            return GridFunction(self.grid, v)
        raise ParameterError(f"unknown propagation method {method!r}")

    def propagator_matrix(self, t: float) -> np.ndarray:
        vals, vecs = self.eigensystem()
        return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T

    # -- functional calculus --------------------------------------------------
    def spectral_cutoff(self, cutoff: EnergyCutoff) -> np.ndarray:
        """Matrix of g_E(T): the smooth window applied to the eigenvalues."""
        vals, vecs = self.eigensystem()
        return (vecs * cutoff(vals)) @ vecs.conj().T

    def spectral_projection(self, threshold: float) -> np.ndarray:
        """Sharp projection onto eigenvalues <= threshold."""
        vals, vecs = self.eigensystem()
        keep = vals <= threshold
        return (vecs * keep.astype(float)) @ vecs.conj().T

    def momentum_magnitude_matrix(self) -> np.ndarray:
        n = self.grid.size
        shape = self.grid.shape
        axes = tuple(range(1, self.grid.dimension + 1))
        mags = np.sqrt(self.grid.momentum_squared())
        basis = np.eye(n, dtype=complex).reshape((n,) + shape)
        hat = np.fft.fftn(basis, axes=axes).reshape(n, n)
        hat *= mags[None, :]
        mat = np.fft.ifftn(hat.reshape((n,) + shape), axes=axes).reshape(n, n).T
        return (mat + mat.conj().T) / 2


def assemble(grid: Grid, kappa: float, potential: GridFunction) -> OneBodyOperator:
    """Build T = kappa |p|^2 + V; the eigendecomposition is computed lazily."""
    return OneBodyOperator(grid, kappa, potential)


def momentum_norm_under_cutoff(T: OneBodyOperator, alpha: float, E: float) -> float:
    """Operator norm of |p| restricted to energies <= alpha^2 E (the speed scale).

    Returns 0 when the spectral window is empty.
    """
    vals, _ = T.eigensystem()
    if not np.any(vals <= alpha**2 * E):
        return 0.0
    proj = T.spectral_projection(alpha**2 * E)
    comp = T.momentum_magnitude_matrix() @ proj
    return float(np.linalg.svd(comp, compute_uv=False)[0])


def operator_norm(mat: np.ndarray) -> float:
    """Largest singular value; dense SVD below the cap, power iteration above."""
    n = max(mat.shape)
    if n <= DENSE_EIG_CAP:
        return float(np.linalg.svd(mat, compute_uv=False)[0])
    rng = np.random.default_rng(0)
    v = rng.standard_normal(mat.shape[1]) + 1j * rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(POWER_ITERATIONS):
        w = mat.conj().T @ (mat @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(math.sqrt(norm) - prev) < POWER_TOL * max(1.0, prev):
            break
        prev = math.sqrt(norm)
    return float(math.sqrt(np.linalg.norm(mat.conj().T @ (mat @ v))))


def propagation_norm(
    T: OneBodyOperator,
    cutoff: EnergyCutoff,
    r: float,
    R: float,
    t: float,
) -> float:
    """Norm of (outside radius R) e^{-itT} g_E(T) (inside radius r).

    Measures how much energy-filtered mass initially inside radius r reaches
    beyond radius R after time t.
    """
    if not (R > r > 0):
        raise ParameterError(f"need R > r > 0, got r={r}, R={R}")
    dist = T.grid.distances_to((0.0,) * T.grid.dimension)
    inner = dist <= r
    outer = dist >= R
    if not inner.any() or not outer.any():
        return 0.0
    vals, vecs = T.eigensystem()
    cols = vecs.conj().T[:, inner]
    cols = (vecs * (np.exp(-1j * vals * t) * cutoff(vals))) @ cols
    sub = cols[outer, :]
    return float(np.linalg.svd(sub, compute_uv=False)[0])


@dataclass(frozen=True)
class OverlapRow:
    """One (probe, time) entry of an overlap scan."""

    t: float
    distance: float
    lhs_overlap: float
    lhs_diff_overlap: float
    rhs_envelope: float
    ratio: float


def overlap_scan(
    T: OneBodyOperator,
    smearing: SmearingFunction,
    probes: Sequence[GridFunction],
    times: Sequence[float],
    n: int,
    delta: float = 0.5,
) -> list[OverlapRow]:
    """Measure |<f, e^{-itT} phi_x>| and |<f, (e^{-itT} - 1) phi_x>| per probe and t.

    The reported envelope is the decay integral int G_{n,t}(x-y) |f(y)|^2 dy;
    ratio = lhs^2 / (<t>^(1+2 delta) * envelope), whose sup over the scan is the
    fitted leading constant of the overlap bound.
    """
    phi = smearing.sample(T.grid)
    x = smearing.center
    dist_field = T.grid.distances_to(x)
    rows: list[OverlapRow] = []
    for t in times:
        evolved = T.propagate(phi, float(t))
        for f in probes:
            lhs = abs(f.inner(evolved))
            lhs_diff = abs(f.inner(evolved - phi))
            env = float(
                (decay_envelope(n, t, dist_field) * np.abs(f.values) ** 2).sum()
                * T.grid.cell_volume
            )
            weight = bracket(t) ** (1 + 2 * delta) * env
            ratio = lhs**2 / weight if weight > 0 else math.inf
            rows.append(
                OverlapRow(
                    t=float(t),
                    distance=f.support_distance_to(x),
                    lhs_overlap=lhs,
                    lhs_diff_overlap=lhs_diff,
                    rhs_envelope=env,
                    ratio=ratio,
                )
            )
    return rows


def annulus_probe(grid: Grid, x: Sequence[float], inner: float, outer: float) -> GridFunction:
    """Normalized indicator of inner <= |y - x| <= outer (periodic distance)."""
    dist = grid.distances_to(x)
    mask = (dist >= inner) & (dist <= outer)
    if not mask.any():
        raise ParameterError(f"annulus [{inner}, {outer}] contains no grid points")
    vals = mask.astype(complex)
    vals /= math.sqrt(float(mask.sum()) * grid.cell_volume)
    return GridFunction(grid, vals)


def lightcone_slope(
    T: OneBodyOperator,
    smearing: SmearingFunction,
    t: float,
    n: int,
    delta: float,
    decade_points: int = 12,
    probe_width: float = 1.0,
) -> float:
    """Fitted log-log slope of |<f_R, e^{-itT} phi_x>|^2 over one decade of R.

    Probes are unit-width annuli starting at R = 2 <t>^(1 + (1+2 delta)/n).
    """
    r_min = 2.0 * bracket(t) ** (1 + (1 + 2 * delta) / n)
    radii = np.geomspace(r_min, 10 * r_min, decade_points)
    phi = smearing.sample(T.grid)
    evolved = T.propagate(phi, t)
    logs_r, logs_v = [], []
    for R in radii:
        probe = annulus_probe(T.grid, smearing.center, R, R + probe_width)
        val = abs(probe.inner(evolved)) ** 2
        logs_r.append(math.log10(R))
        logs_v.append(math.log10(max(val, 1e-300)))
    A = np.vstack([logs_r, np.ones(len(logs_r))]).T
    slope, _ = np.linalg.lstsq(A, np.asarray(logs_v), rcond=None)[0]
    return float(slope)
