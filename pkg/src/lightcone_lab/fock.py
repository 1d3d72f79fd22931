"""Finite-mode fermionic Fock engine.

Mode functions live on a spatial grid; the 2^M-dimensional Fock space carries
Jordan-Wigner generators (parity string, lowering factor, identities), second
quantization, the smeared-pair-interaction Hamiltonian, and Heisenberg
evolution.  The Heisenberg map is tau_t(B) = e^{-itH} B e^{itH}, which makes
the free evolution of an annihilator equal a(e^{-itT} f) and ties the
many-body engine to the one-body propagator through the anticommutation
relations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import (
    CapacityError,
    ConfigError,
    HypothesisError,
    ModelError,
    ParameterError,
    ShapeError,
)
from .grids import Grid, GridFunction, make_gaussian
from .bounds import InteractionSpec
from .onebody import OneBodyOperator

MODE_CAP = 14
DENSE_EVOLUTION_CAP = 4096  # 2^12
GRAM_TOL = 1e-10
PROJECTION_LOSS_LIMIT = 0.05

_LOWER = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
_PARITY = sp.csr_matrix(np.diag([1.0, -1.0]).astype(complex))
_ID2 = sp.identity(2, format="csr", dtype=complex)


def _kron_chain(ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return sp.csr_matrix(out)


def parity_vector(M: int) -> np.ndarray:
    """(-1)^(number of occupied modes) per Fock basis state."""
    states = np.arange(2**M)
    pop = np.zeros(2**M, dtype=int)
    for j in range(M):
        pop += (states >> j) & 1
    return np.where(pop % 2 == 0, 1.0, -1.0)


class FockOperator:
    """Operator on the 2^M-dimensional mode-truncated Fock space."""

    def __init__(self, modes: int, matrix):
        if modes < 1 or modes > MODE_CAP:
            raise CapacityError(f"mode count must be in [1, {MODE_CAP}], got {modes}")
        dim = 2**modes
        if matrix.shape != (dim, dim):
            raise ShapeError(f"matrix must be {dim}x{dim} for {modes} modes")
        self.modes = modes
        self.matrix = matrix if sp.issparse(matrix) else np.asarray(matrix, dtype=complex)
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    # -- constructors -------------------------------------------------------
    @staticmethod
    def identity(modes: int) -> "FockOperator":
        return FockOperator(modes, sp.identity(2**modes, format="csr", dtype=complex))

    @property
    def dim(self) -> int:
        return 2**self.modes

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.modes, self.matrix.conj().T)

    # -- algebra -------------------------------------------------------------
    def _coerce(self, other) -> "FockOperator":
        if not isinstance(other, FockOperator):
            raise ShapeError("expected a FockOperator")
        if other.modes != self.modes:
            raise ShapeError("operators act on different mode counts")
        return other

    def __add__(self, other) -> "FockOperator":
        other = self._coerce(other)
        return FockOperator(self.modes, self.matrix + other.matrix)

    def __sub__(self, other) -> "FockOperator":
        other = self._coerce(other)
        return FockOperator(self.modes, self.matrix - other.matrix)

    def __matmul__(self, other) -> "FockOperator":
        other = self._coerce(other)
        return FockOperator(self.modes, self.matrix @ other.matrix)

    def __rmul__(self, scalar: complex) -> "FockOperator":
        return FockOperator(self.modes, scalar * self.matrix)

    def commutator(self, other: "FockOperator") -> "FockOperator":
        other = self._coerce(other)
        return FockOperator(self.modes, self.matrix @ other.matrix - other.matrix @ self.matrix)

    def anticommutator(self, other: "FockOperator") -> "FockOperator":
        other = self._coerce(other)
        return FockOperator(self.modes, self.matrix @ other.matrix + other.matrix @ self.matrix)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    # -- analysis -------------------------------------------------------------
    def norm(self) -> float:
        """Largest singular value (dense SVD under the cap, else power iteration)."""
        if self.dim <= DENSE_EVOLUTION_CAP:
            return float(np.linalg.svd(self.dense(), compute_uv=False)[0])
        rng = np.random.default_rng(1)
        v = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        prev = 0.0
        for _ in range(200):
            w = self.matrix.conj().T @ (self.matrix @ v)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v = w / nw
            cur = math.sqrt(nw)
            if abs(cur - prev) < 1e-8 * max(1.0, prev):
                break
            prev = cur
        return float(math.sqrt(np.linalg.norm(self.matrix.conj().T @ (self.matrix @ v))))

    def parity(self, tol: float = 1e-12) -> str:
        """'even' | 'odd' | 'mixed' relative to the total parity operator."""
        pi = parity_vector(self.modes)
        dense = self.dense()
        scale = max(np.abs(dense).max(), 1e-300)
        same = pi[:, None] == pi[None, :]
        even_part = np.abs(np.where(same, dense, 0.0)).max()
        odd_part = np.abs(np.where(same, 0.0, dense)).max()
        if odd_part <= tol * scale:
            return "even"
        if even_part <= tol * scale:
            return "odd"
        return "mixed"

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            if self.dim > DENSE_EVOLUTION_CAP:
                raise CapacityError(
                    f"dense eigendecomposition capped at dimension {DENSE_EVOLUTION_CAP}"
                )
            self._eig = tuple(np.linalg.eigh(self.dense()))
        return self._eig


def vacuum_state(modes: int) -> np.ndarray:
    v = np.zeros(2**modes, dtype=complex)
    v[0] = 1.0
    return v


def mode_annihilator(j: int, modes: int) -> FockOperator:
    """Jordan-Wigner annihilator: parity string below j, lowering factor at j."""
    if not (0 <= j < modes):
        raise ParameterError(f"mode index {j} out of range for {modes} modes")
    ops = [_PARITY] * j + [_LOWER] + [_ID2] * (modes - 1 - j)
    return FockOperator(modes, _kron_chain(ops))


def total_number_operator(modes: int) -> FockOperator:
    states = np.arange(2**modes)
    pop = np.zeros(2**modes)
    for j in range(modes):
        pop += (states >> j) & 1
    return FockOperator(modes, sp.diags(pop.astype(complex), format="csr"))


def total_parity_operator(modes: int) -> FockOperator:
    return FockOperator(modes, sp.diags(parity_vector(modes).astype(complex), format="csr"))


@dataclass
class ModeBasis:
    """Orthonormal mode functions on a grid, with provenance tags."""

    grid: Grid
    modes: list[GridFunction]
    tags: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        M = len(self.modes)
        if M < 2:
            raise ConfigError("a mode basis needs at least two modes")
        if M > MODE_CAP:
            raise CapacityError(f"mode count {M} exceeds cap {MODE_CAP}")
        if not self.tags:
            self.tags = [{} for _ in range(M)]
        if len(self.tags) != M:
            raise ConfigError("one tag per mode required")
        gram = self.gram_matrix()
        if np.abs(gram - np.eye(M)).max() > GRAM_TOL:
            raise ModelError("modes are not orthonormal to 1e-10")

    @property
    def size(self) -> int:
        return len(self.modes)

    def gram_matrix(self) -> np.ndarray:
        M = len(self.modes)
        g = np.empty((M, M), dtype=complex)
        for i in range(M):
            for j in range(M):
                g[i, j] = self.modes[i].inner(self.modes[j])
        return g

    def coefficients(self, f: GridFunction) -> np.ndarray:
        """Expansion coefficients c_j = <m_j, f> (antilinear in the mode)."""
        return np.array([m.inner(f) for m in self.modes])

    def projection_loss(self, f: GridFunction) -> float:
        """Relative L2 mass of f outside the span, in [0, 1]."""
        norm2 = f.l2_norm() ** 2
        if norm2 == 0.0:
            return 0.0
        inside = float((np.abs(self.coefficients(f)) ** 2).sum())
        return max(0.0, 1.0 - inside / norm2)

    def synthesize(self, coeffs: np.ndarray) -> GridFunction:
        vals = np.zeros(self.grid.size, dtype=complex)
        for c, m in zip(coeffs, self.modes):
            vals += c * m.values
        return GridFunction(self.grid, vals)


def gram_schmidt_basis(
    grid: Grid, seeds: Sequence[GridFunction], tags: Sequence[dict] | None = None
) -> ModeBasis:
    """Orthonormalize seed functions in order (seed order is preserved)."""
    modes: list[GridFunction] = []
    for seed in seeds:
        v = seed.values.astype(complex).copy()
        for m in modes:
            v -= (np.vdot(m.values, v) * grid.cell_volume) * m.values
        norm = math.sqrt(float((np.abs(v) ** 2).sum() * grid.cell_volume))
        if norm < 1e-12:
            raise ModelError("seed functions are linearly dependent")
        modes.append(GridFunction(grid, v / norm))
    return ModeBasis(grid, modes, list(tags) if tags is not None else [])


def annihilation_operator(f: GridFunction | np.ndarray, basis: ModeBasis) -> FockOperator:
    """a(f) = sum_j conj(c_j) a_j with c_j = <m_j, f>; out-of-span mass is projected."""
    if isinstance(f, GridFunction):
        coeffs = basis.coefficients(f)
    else:
        coeffs = np.asarray(f, dtype=complex)
        if coeffs.shape != (basis.size,):
            raise ShapeError("coefficient vector has wrong length")
    out = None
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        term = np.conj(c) * mode_annihilator(j, basis.size).matrix
        out = term if out is None else out + term
    if out is None:
        out = sp.csr_matrix((2**basis.size, 2**basis.size), dtype=complex)
    return FockOperator(basis.size, out)


def creation_operator(f: GridFunction | np.ndarray, basis: ModeBasis) -> FockOperator:
    return annihilation_operator(f, basis).adjoint()


def second_quantize(one_body: np.ndarray, modes: int | None = None) -> FockOperator:
    """Lift a Hermitian mode-space matrix additively to Fock space."""
    A = np.asarray(one_body, dtype=complex)
    M = A.shape[0] if modes is None else modes
    if A.shape != (M, M):
        raise ShapeError("one-body matrix must be square over the modes")
    if np.abs(A - A.conj().T).max() > 1e-12 * max(1.0, np.abs(A).max()):
        raise ModelError("one-body matrix must be Hermitian")
    ann = [mode_annihilator(j, M).matrix for j in range(M)]
    out = sp.csr_matrix((2**M, 2**M), dtype=complex)
    for j in range(M):
        for k in range(M):
            if abs(A[j, k]) < 1e-16:
                continue
            out = out + A[j, k] * (ann[j].conj().T @ ann[k])
    return FockOperator(M, out)


# ---------------------------------------------------------------------------
# Interacting model
# ---------------------------------------------------------------------------

@dataclass
class ModelSpec:
    """Mode-truncated many-body model: dGamma(T) plus smeared pair interaction."""

    basis: ModeBasis
    one_body: np.ndarray
    centers: np.ndarray
    interaction: InteractionSpec
    sigma: float
    quad_weight: float
    coupling: float = 1.0
    _hamiltonian: FockOperator | None = field(default=None, repr=False)
    _free_hamiltonian: FockOperator | None = field(default=None, repr=False)
    _max_projection_loss: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        A = np.asarray(self.one_body, dtype=complex)
        if np.abs(A - A.conj().T).max() > 1e-12 * max(1.0, np.abs(A).max()):
            raise ModelError("one-body mode matrix must be Hermitian")
        self.one_body = A
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if self.centers.size and self.centers.shape[1] != self.basis.grid.dimension:
            raise ShapeError("interaction centers have wrong dimension")

    @classmethod
    def from_onebody(
        cls,
        basis: ModeBasis,
        T: OneBodyOperator,
        interaction: InteractionSpec,
        sigma: float,
        centers: Sequence[Sequence[float]] | Sequence[float],
        quad_weight: float,
        coupling: float = 1.0,
    ) -> "ModelSpec":
        mat = np.empty((basis.size, basis.size), dtype=complex)
        applied = [T.apply(m) for m in basis.modes]
        for i in range(basis.size):
            for j in range(basis.size):
                mat[i, j] = basis.modes[i].inner(applied[j])
        mat = (mat + mat.conj().T) / 2
        centers_arr = np.atleast_2d(np.asarray(centers, dtype=float))
        if centers_arr.shape[0] == 1 and centers_arr.shape[1] > 1 and basis.grid.dimension == 1:
            centers_arr = centers_arr.T
        return cls(basis, mat, centers_arr, interaction, sigma, quad_weight, coupling)

    @property
    def max_projection_loss(self) -> float:
        self.free_hamiltonian()  # smearing losses are computed during assembly
        return self._max_projection_loss

    def smearing_at(self, x: np.ndarray) -> GridFunction:
        return make_gaussian(self.basis.grid, self.sigma, x, "l1")

    def free_hamiltonian(self) -> FockOperator:
        if self._free_hamiltonian is None:
            self._free_hamiltonian = second_quantize(self.one_body)
        return self._free_hamiltonian

    def hamiltonian(self) -> FockOperator:
        if self._hamiltonian is None:
            self._hamiltonian = build_hamiltonian(self)
        return self._hamiltonian


def build_hamiltonian(model: ModelSpec) -> FockOperator:
    """dGamma(T) + sum over center pairs of W(x-y) w^2 a+(phi_x)a+(phi_y)a(phi_y)a(phi_x)."""
    H = model.free_hamiltonian()
    if model.centers.size == 0:
        warnings.warn("no interaction centers; Hamiltonian is the free one", RuntimeWarning)
        return H
    basis = model.basis
    ann_ops = []
    max_loss = 0.0
    for x in model.centers:
        phi = model.smearing_at(x)
        max_loss = max(max_loss, basis.projection_loss(phi))
        ann_ops.append(annihilation_operator(phi, basis).matrix)
    model._max_projection_loss = max_loss
    if max_loss > PROJECTION_LOSS_LIMIT:
        warnings.warn(
            f"smearing projection loss {max_loss:.3f} exceeds "
            f"{PROJECTION_LOSS_LIMIT}; many-body results are unreliable",
            RuntimeWarning,
        )
    total = H.matrix
    grid = basis.grid
    for i, xi in enumerate(model.centers):
        for j, xj in enumerate(model.centers):
            if i == j:
                continue  # a(phi_x) a(phi_x) = 0 exactly
            w = model.coupling * float(
                np.asarray(model.interaction.profile(
                    np.linalg.norm(grid.wrap(xi - xj))
                ))
            )
            if w == 0.0:
                continue
            ai, aj = ann_ops[i], ann_ops[j]
            quartic = ai.conj().T @ aj.conj().T @ aj @ ai
            total = total + (w * model.quad_weight**2) * quartic
    mat = total.toarray() if sp.issparse(total) else total
    mat = (mat + mat.conj().T) / 2
    return FockOperator(basis.size, mat)


def heisenberg_evolve(B: FockOperator, H: FockOperator, t: float) -> FockOperator:
    """tau_t(B) = e^{-itH} B e^{itH}, via the cached eigendecomposition of H."""
    if B.modes != H.modes:
        raise ShapeError("operator and Hamiltonian mode counts differ")
    if t == 0.0:
        return FockOperator(B.modes, B.dense().copy())
    if H.dim > DENSE_EVOLUTION_CAP:
        from scipy.sparse.linalg import expm_multiply

        Hm = sp.csr_matrix(H.matrix) if not sp.issparse(H.matrix) else H.matrix
        left = expm_multiply(-1j * t * Hm, B.dense())
        full = expm_multiply(-1j * t * Hm, left.conj().T).conj().T
        return FockOperator(B.modes, full)
    vals, vecs = H.eigensystem()
    U = (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T
    return FockOperator(B.modes, U @ B.dense() @ U.conj().T)


def anticommutator_difference(model: ModelSpec, f: GridFunction, g: GridFunction, t: float) -> float:
    """Norm gap between interacting and free evolution, probed by anticommutators.

    ||{tau_t(a(f)) - tau^0_t(a(f)), a+(g)}|| + ||{tau_t(a+(f)), a+(g)}||.
    """
    basis = model.basis
    af = annihilation_operator(f, basis)
    adf = af.adjoint()
    adg = creation_operator(g, basis)
    H = model.hamiltonian()
    H0 = model.free_hamiltonian()
    moved = heisenberg_evolve(af, H, t) - heisenberg_evolve(af, H0, t)
    term1 = moved.anticommutator(adg).norm()
    term2 = heisenberg_evolve(adf, H, t).anticommutator(adg).norm()
    return term1 + term2


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    gap: float
    degenerate: bool


def ground_state(H: FockOperator, degeneracy_tol: float = 1e-10) -> GroundState:
    """Lowest eigenpair and spectral gap of a Hermitian Fock operator."""
    if H.dim <= DENSE_EVOLUTION_CAP:
        vals, vecs = H.eigensystem()
        energy, gap = float(vals[0]), float(vals[1] - vals[0])
        vec = vecs[:, 0]
    else:
        Hm = sp.csr_matrix(H.matrix) if not sp.issparse(H.matrix) else H.matrix
        vals, vecs = eigsh(Hm, k=2, which="SA")
        order = np.argsort(vals)
        energy, gap = float(vals[order[0]]), float(vals[order[1]] - vals[order[0]])
        vec = vecs[:, order[0]]
    residual = np.linalg.norm(H.matrix @ vec - energy * vec)
    if residual > 1e-8 * max(1.0, abs(energy)):
        raise ModelError(f"eigensolver residual {residual} too large")
    return GroundState(energy, vec, gap, gap < degeneracy_tol)


def clustering_probe(H: FockOperator, A: FockOperator, B: FockOperator, b: float) -> complex:
    """e^{b E0} <psi0, A e^{-bH} B psi0>, evaluated with the spectrum shifted by E0.

    The shift keeps all exponentials <= 1, so the value is stable for any b >= 0;
    gapped ground state required.
    """
    if b < 0 or not math.isfinite(b):
        raise ParameterError("imaginary time b must be finite and nonnegative")
    gs = ground_state(H)
    if gs.degenerate:
        raise ModelError("degenerate ground space; clustering probe refuses to run")
    vals, vecs = H.eigensystem()
    damped = vecs @ (np.exp(-b * (vals - gs.energy)) * (vecs.conj().T @ (B.matrix @ gs.vector)))
    return complex(np.vdot(A.adjoint().matrix @ gs.vector, damped))


def nested_volume_differences(
    models: Sequence[ModelSpec], f: GridFunction, t_grid: Sequence[float]
) -> list[tuple[float, int, float]]:
    """||tau^(k+1)_t(a(f)) - tau^k_t(a(f))|| for consecutive nested volumes.

    All models must share the mode basis; volumes grow only through their
    interaction center sets.
    """
    if len(models) < 2:
        raise ConfigError("need at least two nested volumes")
    base = models[0].basis
    for m in models[1:]:
        if m.basis is not base and m.basis.size != base.size:
            raise ConfigError("all volumes must share one mode basis")
    for small, large in zip(models, models[1:]):
        small_set = {tuple(c) for c in np.atleast_2d(small.centers)}
        large_set = {tuple(c) for c in np.atleast_2d(large.centers)}
        if not small_set <= large_set:
            raise ConfigError("volume masks are not nested")
    af = annihilation_operator(f, base)
    rows = []
    for t in t_grid:
        evolved = [heisenberg_evolve(af, m.hamiltonian(), t) for m in models]
        for k in range(len(models) - 1):
            rows.append((float(t), k + 1, (evolved[k + 1] - evolved[k]).norm()))
    return rows
