"""Uniform periodic grids, sampled functions, smearing profiles, dyadic splitting.

Everything lives on the torus [-L/2, L/2)^d with d in {1, 2}.  All norms and
inner products carry the Riemann weight h^d, so they approximate their
continuum counterparts directly.  The inner product is antilinear in the
first argument.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ParameterError, ResolutionError, ShapeError

# |values| below SUPPORT_TOL * max|values| count as numerically zero
SUPPORT_TOL = 1e-14


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: P points per axis (power of two) on a box of side L."""

    dimension: int
    points_per_axis: int
    box_length: float

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ConfigError(f"dimension must be 1 or 2, got {self.dimension}")
        P = self.points_per_axis
        if P < 2 or (P & (P - 1)) != 0:
            raise ConfigError(f"points_per_axis must be a power of two, got {P}")
        if not (self.box_length > 0):
            raise ConfigError(f"box_length must be positive, got {self.box_length}")
        if P**self.dimension < 8:
            raise ConfigError("total point count must be at least 8")

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def axis_coordinates(self) -> np.ndarray:
        """Coordinates of one axis, covering [-L/2, L/2)."""
        return -self.box_length / 2 + self.spacing * np.arange(self.points_per_axis)

    def coordinates(self) -> np.ndarray:
        """(size, dimension) array of all grid points."""
        ax = self.axis_coordinates()
        if self.dimension == 1:
            return ax[:, None]
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def axis_momenta(self) -> np.ndarray:
        """Discrete momenta 2*pi*k/L of one axis in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def momentum_squared(self) -> np.ndarray:
        """|p|^2 on the full grid, flattened, FFT order per axis."""
        p = self.axis_momenta()
        if self.dimension == 1:
            return p**2
        PX, PY = np.meshgrid(p, p, indexing="ij")
        return (PX**2 + PY**2).ravel()

    def wrap(self, delta: np.ndarray) -> np.ndarray:
        """Fold displacements into [-L/2, L/2) per axis."""
        L = self.box_length
        return (np.asarray(delta) + L / 2) % L - L / 2

    def distances_to(self, x: Sequence[float]) -> np.ndarray:
        """Periodic Euclidean distance of every grid point to x, flattened."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise ShapeError(f"point must have {self.dimension} coordinates")
        d = self.wrap(self.coordinates() - x[None, :])
        return np.sqrt((d**2).sum(axis=1))

    def contains(self, x: Sequence[float]) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= -self.box_length / 2) and np.all(x < self.box_length / 2))


@dataclass(frozen=True)
class GridFunction:
    """Complex-valued function sampled on a Grid (flattened values, immutable)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        if v.shape == self.grid.shape:
            v = v.ravel()
        if v.shape != (self.grid.size,):
            raise ShapeError(f"values must have length {self.grid.size}, got {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    # -- norms, all weighted with the cell volume h^d --
    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum() * self.grid.cell_volume)

    def l2_norm(self) -> float:
        return math.sqrt(float((np.abs(self.values) ** 2).sum() * self.grid.cell_volume))

    def linf_norm(self) -> float:
        return float(np.abs(self.values).max())

    def integral(self) -> complex:
        return complex(self.values.sum() * self.grid.cell_volume)

    def inner(self, other: "GridFunction") -> complex:
        """<self, other>, antilinear in self."""
        self._check_same_grid(other)
        return complex(np.vdot(self.values, other.values) * self.grid.cell_volume)

    def support_mask(self) -> np.ndarray:
        peak = np.abs(self.values).max()
        if peak == 0.0:
            return np.zeros(self.grid.size, dtype=bool)
        return np.abs(self.values) > SUPPORT_TOL * peak

    def support_distance_to(self, x: Sequence[float]) -> float:
        """min distance of the numerical support to the point x (inf if empty)."""
        mask = self.support_mask()
        if not mask.any():
            return math.inf
        return float(self.grid.distances_to(x)[mask].min())

    # -- small arithmetic surface used by tests and assembly --
    def _check_same_grid(self, other: "GridFunction") -> None:
        if self.grid != other.grid:
            raise ShapeError("grid mismatch")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.grid, self.values - other.values)

    def scaled(self, c: complex) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    def normalized(self) -> "GridFunction":
        n = self.l2_norm()
        if n == 0.0:
            raise ParameterError("cannot normalize the zero function")
        return self.scaled(1.0 / n)

    def reshaped(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def fourier_l2_norm(self) -> float:
        """L2 norm of the orthonormal DFT coefficients, same weight as l2_norm."""
        coeffs = np.fft.fftn(self.reshaped(), norm="ortho")
        return math.sqrt(float((np.abs(coeffs) ** 2).sum() * self.grid.cell_volume))


GAUSSIAN_NORMALIZATIONS = ("l1", "l2", "as-printed")


@dataclass(frozen=True)
class SmearingFunction:
    """Localized profile centered at a point; the pair-interaction regulator.

    kind "gaussian" uses exp(-|y-x|^2 / (2 sigma^2)) with a normalization mode;
    kind "schwartz_custom" samples a caller-supplied radial profile.
    """

    kind: str
    center: tuple[float, ...]
    sigma: float | None = None
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    normalization: str = "l1"

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "schwartz_custom"):
            raise ConfigError(f"unknown smearing kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.sigma is None or self.sigma <= 0:
                raise ConfigError("gaussian smearing requires sigma > 0")
        elif self.profile is None:
            raise ConfigError("schwartz_custom smearing requires a profile callable")

    def sample(self, grid: Grid) -> GridFunction:
        if self.kind == "gaussian":
            return make_gaussian(grid, self.sigma, self.center, self.normalization)
        r = grid.distances_to(self.center)
        return GridFunction(grid, self.profile(r).astype(complex))


def make_gaussian(
    grid: Grid,
    sigma: float,
    center: Sequence[float],
    normalization: str = "l1",
) -> GridFunction:
    """Sample the smearing Gaussian of width sigma centered at the given point.

    normalization:
      "l1"         -- coefficient chosen so the grid integral is exactly 1 (default),
      "l2"         -- unit weighted L2 norm,
      "as-printed" -- coefficient (pi sigma^2)^(-d/2); its integral is 2^(d/2).
    """
    if normalization not in GAUSSIAN_NORMALIZATIONS:
        raise ConfigError(f"unknown normalization {normalization!r}")
    if sigma < 2 * grid.spacing:
        raise ResolutionError(
            f"sigma={sigma} is below 2h={2 * grid.spacing}; grid cannot resolve it"
        )
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if not grid.contains(center):
        raise ConfigError(f"center {center} lies outside the box")
    r = grid.distances_to(center)
    base = np.exp(-(r**2) / (2 * sigma**2))
    if normalization == "as-printed":
        vals = (np.pi * sigma**2) ** (-grid.dimension / 2) * base
    elif normalization == "l1":
        vals = base / (base.sum() * grid.cell_volume)
    else:
        vals = base / math.sqrt(float((base**2).sum() * grid.cell_volume))
    return GridFunction(grid, vals.astype(complex))


def make_bump(
    grid: Grid,
    width: float,
    center: Sequence[float],
    normalization: str = "l2",
) -> GridFunction:
    """Smooth bump exp(-1/(1-u^2)), u = |y-x|/width: exact support |y-x| < width.

    Compact support keeps mode tiers sharp: disjoint bumps stay untouched by
    orthonormalization.
    """
    if normalization not in GAUSSIAN_NORMALIZATIONS:
        raise ConfigError(f"unknown normalization {normalization!r}")
    if width < 4 * grid.spacing:
        raise ResolutionError(f"width={width} is below 4h={4 * grid.spacing}")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if not grid.contains(center):
        raise ConfigError(f"center {center} lies outside the box")
    u = grid.distances_to(center) / width
    vals = np.zeros(grid.size)
    inside = u < 1.0
    vals[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    if normalization == "l1":
        vals = vals / (vals.sum() * grid.cell_volume)
    elif normalization == "l2":
        vals = vals / math.sqrt(float((vals**2).sum() * grid.cell_volume))
    return GridFunction(grid, vals.astype(complex))


def bracket(t: float) -> float:
    """<t> = sqrt(1 + t^2)."""
    return math.sqrt(1.0 + float(t) ** 2)


@dataclass(frozen=True)
class DecayEnvelope:
    """Polynomial decay profile: 1 inside radius <t>, ((<t>)/r)^n outside."""

    n: int
    t: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"decay exponent must be >= 1, got {self.n}")

    def __call__(self, r) -> np.ndarray | float:
        return decay_envelope(self.n, self.t, r)

    def sample(self, grid: Grid, center: Sequence[float] | None = None) -> GridFunction:
        """Envelope of the periodic distance to center (default: origin)."""
        if center is None:
            center = (0.0,) * grid.dimension
        return GridFunction(grid, decay_envelope(self.n, self.t, grid.distances_to(center)))


def decay_envelope(n: int, t: float, r) -> np.ndarray | float:
    """min(1, (<t>/r)^n) with <t> = sqrt(1+t^2); equals 1 for r <= <t>."""
    if n < 1 or int(n) != n:
        raise ParameterError(f"decay exponent must be a positive integer, got {n}")
    tb = bracket(t)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ParameterError("distance must be nonnegative")
    r_flat = np.atleast_1d(r_arr)
    ratio = np.ones_like(r_flat)
    outside = r_flat > tb
    ratio[outside] = (tb / r_flat[outside]) ** n
    if np.isscalar(r):
        return float(ratio[0])
    return ratio.reshape(r_arr.shape)


def dyadic_decompose(f: GridFunction, x: Sequence[float]) -> list[GridFunction]:
    """Split f into annular pieces around x: |y-x| <= 1, then (2^(k-1), 2^k].

    The pieces have pairwise disjoint supports and sum to f exactly.
    """
    if not f.support_mask().any():
        raise ParameterError("dyadic decomposition requires a nonzero function")
    r = f.grid.distances_to(x)
    pieces = [GridFunction(f.grid, np.where(r <= 1.0, f.values, 0.0))]
    rmax = r.max()
    k = 1
    while 2 ** (k - 1) < rmax:
        mask = (r > 2 ** (k - 1)) & (r <= 2**k)
        pieces.append(GridFunction(f.grid, np.where(mask, f.values, 0.0)))
        k += 1
    return pieces


def reflect(f: GridFunction) -> GridFunction:
    """Samples of y -> f(-y) on the same grid (periodic reflection)."""
    v = f.reshaped()
    for axis in range(f.grid.dimension):
        v = np.roll(np.flip(v, axis=axis), 1, axis=axis)
    return GridFunction(f.grid, v)


def delta_function(grid: Grid) -> GridFunction:
    """Unit-mass grid delta at the origin: value 1/h^d in the origin cell."""
    vals = np.zeros(grid.size, dtype=complex)
    idx = np.argmin(grid.distances_to((0.0,) * grid.dimension))
    vals[idx] = 1.0 / grid.cell_volume
    return GridFunction(grid, vals)


def periodic_convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """(f * g)(x) = sum_y f(y) g(x - y) h^d with periodic wrap, via FFT.

    The displacement x - y is evaluated through the torus metric, so the
    grid delta at the origin is the identity element.
    """
    if f.grid != g.grid:
        raise ShapeError("grid mismatch")
    F = np.fft.fftn(f.reshaped())
    # shift moves the origin cell to index 0, matching FFT convolution indexing
    G = np.fft.fftn(np.fft.ifftshift(g.reshaped()))
    conv = np.fft.ifftn(F * G) * f.grid.cell_volume
    return GridFunction(f.grid, conv)


# ---------------------------------------------------------------------------
# CSV serialization: columns (index per axis ..., re, im)
# ---------------------------------------------------------------------------

def write_gridfunction_csv(f: GridFunction, path: str) -> None:
    axes = ["i"] if f.grid.dimension == 1 else ["i", "j"]
    P = f.grid.points_per_axis
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(axes + ["re", "im"])
        for flat, v in enumerate(f.values):
            if f.grid.dimension == 1:
                idx = [flat]
            else:
                idx = [flat // P, flat % P]
            w.writerow(idx + [repr(float(v.real)), repr(float(v.imag))])


def read_gridfunction_csv(path: str, grid: Grid) -> GridFunction:
    vals = np.zeros(grid.size, dtype=complex)
    P = grid.points_per_axis
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        expected = (["i"] if grid.dimension == 1 else ["i", "j"]) + ["re", "im"]
        if header != expected:
            raise ConfigError(f"unexpected header {header}, want {expected}")
        for row in rows:
            if grid.dimension == 1:
                flat = int(row[0])
            else:
                flat = int(row[0]) * P + int(row[1])
            vals[flat] = float(row[-2]) + 1j * float(row[-1])
    return GridFunction(grid, vals)
