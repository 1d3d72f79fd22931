import math

import numpy as np
import pytest

from lightcone_lab import (
    ConfigError,
    Grid,
    GridFunction,
    InteractionSpec,
    ModelError,
    ModeBasis,
    ModelSpec,
    annihilation_operator,
    anticommutator_difference,
    assemble,
    build_hamiltonian,
    clustering_probe,
    creation_operator,
    gram_schmidt_basis,
    ground_state,
    heisenberg_evolve,
    make_gaussian,
    mode_annihilator,
    nested_volume_differences,
    second_quantize,
    total_number_operator,
    total_parity_operator,
    vacuum_state,
)

GRID = Grid(1, 256, 48.0)


def gaussian_basis(positions, sigma=1.0, grid=GRID):
    seeds = [make_gaussian(grid, sigma, [p], "l2") for p in positions]
    tags = [{"position": p} for p in positions]
    return gram_schmidt_basis(grid, seeds, tags)


@pytest.fixture(scope="module")
def basis6():
    return gaussian_basis([-7.5, -4.5, -1.5, 1.5, 4.5, 7.5])


def zero_interaction():
    return InteractionSpec(profile=lambda r: np.zeros_like(np.asarray(r, float)), c_W=1.0, n_W=4)


def gaussian_interaction(strength):
    return InteractionSpec(
        profile=lambda r: strength * np.exp(-np.asarray(r, float) ** 2 / 2.0),
        c_W=max(strength * 4.6, 1e-12),
        n_W=4,
    )


class TestJordanWigner:
    def test_car_relations_exact(self):
        M = 6
        ident = np.eye(2**M)
        ann = [mode_annihilator(j, M) for j in range(M)]
        for j in range(M):
            for k in range(M):
                zero = ann[j].anticommutator(ann[k]).dense()
                assert np.abs(zero).max() == 0.0
                mixed = ann[j].anticommutator(ann[k].adjoint()).dense()
                target = ident if j == k else 0 * ident
                assert np.abs(mixed - target).max() <= 1e-14

    def test_annihilator_kills_vacuum(self):
        M = 5
        vac = vacuum_state(M)
        for j in range(M):
            assert np.abs(mode_annihilator(j, M).apply(vac)).max() == 0.0

    def test_norm_one(self):
        assert mode_annihilator(2, 6).norm() == pytest.approx(1.0, abs=1e-12)

    def test_index_out_of_range(self):
        with pytest.raises(Exception):
            mode_annihilator(6, 6)
        with pytest.raises(Exception):
            mode_annihilator(-1, 6)

    def test_parity_grading(self):
        M = 5
        parity = total_parity_operator(M)
        a2 = mode_annihilator(2, M)
        anti = parity @ a2 + a2 @ parity
        assert np.abs(anti.dense()).max() < 1e-12
        assert a2.parity() == "odd"
        assert (a2 @ a2.adjoint()).parity() == "even"


class TestModeBasis:
    def test_gram_matrix_identity(self, basis6):
        gram = basis6.gram_matrix()
        assert np.abs(gram - np.eye(basis6.size)).max() < 1e-10

    def test_projection_loss_zero_for_modes(self, basis6):
        assert basis6.projection_loss(basis6.modes[2]) < 1e-12

    def test_projection_loss_for_outside_function(self, basis6):
        f = GridFunction(GRID, (GRID.distances_to([20.0]) <= 0.5).astype(complex))
        assert basis6.projection_loss(f.normalized()) > 0.9

    def test_too_few_modes(self):
        with pytest.raises(ConfigError):
            ModeBasis(GRID, [make_gaussian(GRID, 1.0, [0.0], "l2")])


class TestAnnihilationOperator:
    def test_single_mode_recovered(self, basis6):
        a0 = annihilation_operator(basis6.modes[0], basis6)
        direct = mode_annihilator(0, basis6.size)
        assert np.abs((a0 - direct).dense()).max() < 1e-12

    def test_car_for_random_in_span(self, basis6):
        rng = np.random.default_rng(4)
        for _ in range(5):
            cf = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            cg = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            f = basis6.synthesize(cf)
            g = basis6.synthesize(cg)
            af = annihilation_operator(f, basis6)
            adg = creation_operator(g, basis6)
            anti = af.anticommutator(adg).dense()
            expected = f.inner(g) * np.eye(2**6)
            assert np.abs(anti - expected).max() < 1e-12

    def test_antilinearity(self, basis6):
        f = basis6.modes[1]
        a_if = annihilation_operator(f.scaled(1j), basis6)
        a_f = annihilation_operator(f, basis6)
        assert np.abs((a_if.dense() + 1j * a_f.dense())).max() < 1e-12

    def test_norm_is_projected_norm(self, basis6):
        f = basis6.synthesize(np.array([0.6, 0.8, 0, 0, 0, 0], dtype=complex))
        assert annihilation_operator(f, basis6).norm() == pytest.approx(1.0, abs=1e-10)


class TestSecondQuantize:
    def test_identity_gives_number_operator(self):
        M = 5
        N = second_quantize(np.eye(M))
        expected = total_number_operator(M)
        assert np.abs((N - expected).dense()).max() < 1e-12

    def test_one_particle_sector(self):
        M = 4
        rng = np.random.default_rng(7)
        A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        A = (A + A.conj().T) / 2
        dG = second_quantize(A).dense()
        # single-particle basis state for mode j has index 2^(M-1-j)
        idx = [2 ** (M - 1 - j) for j in range(M)]
        sector = dG[np.ix_(idx, idx)]
        assert np.abs(sector - A).max() < 1e-12

    def test_annihilates_vacuum(self):
        A = np.diag([1.0, 2.0, 3.0])
        dG = second_quantize(A)
        assert np.abs(dG.apply(vacuum_state(3))).max() == 0.0

    def test_bogoliubov_identity(self):
        # e^{it dG(A)} a+(f) e^{-it dG(A)} = a+(e^{itA} f) by direct matrices
        M = 4
        rng = np.random.default_rng(11)
        A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        A = (A + A.conj().T) / 2
        dG = second_quantize(A)
        coeffs = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        grid = Grid(1, 64, 16.0)
        seeds = [make_gaussian(grid, 1.0, [p], "l2") for p in (-4.5, -1.5, 1.5, 4.5)]
        basis = gram_schmidt_basis(grid, seeds)
        t = 0.83
        vals, vecs = np.linalg.eigh(A)
        expA = (vecs * np.exp(1j * vals * t)) @ vecs.conj().T
        lhs = heisenberg_evolve(
            creation_operator(coeffs, basis), dG, -t
        )  # e^{+it dG} a+ e^{-it dG}
        rhs = creation_operator(expA @ coeffs, basis)
        assert np.abs((lhs - rhs).dense()).max() < 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ModelError):
            second_quantize(np.array([[0.0, 1.0], [0.0, 0.0]]))


def small_model(coupling, positions=(-7.5, -4.5, -1.5, 1.5, 4.5, 7.5), centers=None):
    basis = gaussian_basis(list(positions))
    T = assemble(GRID, 0.5, GridFunction(GRID, np.zeros(GRID.size)))
    if centers is None:
        centers = [[p] for p in positions[1:-1]]
    interaction = gaussian_interaction(coupling) if coupling else zero_interaction()
    return ModelSpec.from_onebody(
        basis, T, interaction, sigma=1.0, centers=centers,
        quad_weight=3.0, coupling=1.0,
    )


class TestBuildHamiltonian:
    def test_zero_interaction_gives_free(self):
        model = small_model(0.0)
        H = build_hamiltonian(model)
        H0 = model.free_hamiltonian()
        assert np.abs((H - H0).dense()).max() < 1e-12

    def test_single_center_interaction_vanishes(self):
        model = small_model(0.5, centers=[[-1.5]])
        H = build_hamiltonian(model)
        assert np.abs((H - model.free_hamiltonian()).dense()).max() < 1e-12

    def test_hermitian_and_number_conserving(self):
        model = small_model(0.4)
        H = model.hamiltonian()
        dense = H.dense()
        assert np.abs(dense - dense.conj().T).max() < 1e-10
        N = total_number_operator(model.basis.size)
        assert np.abs(H.commutator(N).dense()).max() < 1e-10


class TestHeisenberg:
    def test_time_zero(self, basis6):
        model = small_model(0.3)
        af = annihilation_operator(basis6.modes[0], model.basis)
        out = heisenberg_evolve(af, model.hamiltonian(), 0.0)
        assert np.abs((out - af).dense()).max() == 0.0

    def test_norm_preserved(self):
        model = small_model(0.3)
        af = annihilation_operator(model.basis.modes[1], model.basis)
        out = heisenberg_evolve(af, model.hamiltonian(), 1.3)
        assert out.norm() == pytest.approx(af.norm(), abs=1e-10)

    def test_group_law(self):
        model = small_model(0.3)
        H = model.hamiltonian()
        af = annihilation_operator(model.basis.modes[2], model.basis)
        lhs = heisenberg_evolve(af, H, 0.9)
        rhs = heisenberg_evolve(heisenberg_evolve(af, H, 0.4), H, 0.5)
        assert np.abs((lhs - rhs).dense()).max() < 1e-9

    def test_dimension_mismatch_rejected(self):
        from lightcone_lab import FockOperator, ShapeError

        model = small_model(0.3)
        small_op = FockOperator.identity(3)
        with pytest.raises(ShapeError):
            heisenberg_evolve(small_op, model.hamiltonian(), 0.5)

    def test_free_dynamics_bridge(self):
        # {tau_t^0(a(f)), a+(g)} = <e^{-itT} f, g> Id with T the mode matrix
        model = small_model(0.0)
        basis = model.basis
        rng = np.random.default_rng(3)
        vals, vecs = np.linalg.eigh(model.one_body)
        H0 = model.free_hamiltonian()
        for _ in range(5):
            cf = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            cg = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            t = float(rng.uniform(0.1, 2.0))
            af = annihilation_operator(cf, basis)
            adg = creation_operator(cg, basis)
            moved = heisenberg_evolve(af, H0, t)
            anti = moved.anticommutator(adg).dense()
            evolved_cf = (vecs * np.exp(-1j * vals * t)) @ (vecs.conj().T @ cf)
            scalar = np.vdot(evolved_cf, cg)
            assert np.abs(anti - scalar * np.eye(2**6)).max() < 1e-10


class TestAnticommutatorDifference:
    def test_zero_at_time_zero(self):
        model = small_model(0.4)
        f = model.basis.modes[2]
        g = model.basis.modes[3]
        assert anticommutator_difference(model, f, g, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_zero_for_free_model(self):
        model = small_model(0.0)
        f = model.basis.modes[2]
        g = model.basis.modes[3]
        assert anticommutator_difference(model, f, g, 0.8) < 1e-10

    def test_trivial_norm_bound(self):
        model = small_model(0.6)
        rng = np.random.default_rng(9)
        cf = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        cg = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        f = model.basis.synthesize(cf)
        g = model.basis.synthesize(cg)
        val = anticommutator_difference(model, f, g, 1.0)
        assert val <= 6 * f.l2_norm() * g.l2_norm() + 1e-9


class TestGroundState:
    def test_free_positive_spectrum_vacuum(self):
        model = small_model(0.0)
        # shift one-body spectrum strictly positive
        shifted = ModelSpec(
            basis=model.basis,
            one_body=model.one_body + 2.0 * np.eye(model.basis.size),
            centers=np.empty((0, 1)),
            interaction=zero_interaction(),
            sigma=1.0,
            quad_weight=1.0,
        )
        with pytest.warns(RuntimeWarning):
            H = shifted.hamiltonian()
        gs = ground_state(H)
        assert gs.energy == pytest.approx(0.0, abs=1e-10)
        assert np.abs(np.abs(gs.vector[0]) - 1.0) < 1e-10
        one_body_vals = np.linalg.eigvalsh(shifted.one_body)
        assert gs.gap == pytest.approx(one_body_vals[0], abs=1e-10)

    def test_residual_small_random_model(self):
        model = small_model(0.5)
        gs = ground_state(model.hamiltonian())
        H = model.hamiltonian()
        residual = np.linalg.norm(H.dense() @ gs.vector - gs.energy * gs.vector)
        assert residual <= 1e-8


class TestClusteringProbe:
    def test_b_zero_matches_direct_expectation(self):
        model = small_model(0.5)
        H = model.hamiltonian()
        basis = model.basis
        A = creation_operator(basis.modes[1], basis) @ annihilation_operator(
            basis.modes[2], basis
        )
        B = creation_operator(basis.modes[3], basis) @ annihilation_operator(
            basis.modes[4], basis
        )
        gs = ground_state(H)
        direct = np.vdot(gs.vector, (A @ B).dense() @ gs.vector)
        assert clustering_probe(H, A, B, 0.0) == pytest.approx(direct, abs=1e-12)

    def test_ground_space_eigenvector_b_independent(self):
        model = small_model(0.5)
        H = model.hamiltonian()
        ident = 1.0 * type(H).identity(H.modes)
        gs = ground_state(H)
        A = creation_operator(model.basis.modes[0], model.basis) @ annihilation_operator(
            model.basis.modes[0], model.basis
        )
        vals = [clustering_probe(H, A, ident, b) for b in (0.0, 1.0, 5.0)]
        assert all(abs(v - vals[0]) < 1e-10 for v in vals)

    def test_distance_decay_audit(self):
        # chain-like model (dimerized hopping in mode space, gapped half-filled
        # sea): |<psi0, a+(m0) e^{-b(H-E0)} a(m_j) psi0>| non-increasing over a
        # 3-point distance sweep at fixed b; qualitative check only
        grid = Grid(1, 512, 80.0)
        positions = np.arange(-13.5, 14.0, 3.0)  # 10 modes
        seeds = [make_gaussian(grid, 1.0, [p], "l2") for p in positions]
        basis = gram_schmidt_basis(grid, seeds)
        chain = np.zeros((10, 10))
        for j in range(9):
            chain[j, j + 1] = chain[j + 1, j] = -1.0
        chain += np.diag([0.3 * (-1) ** j for j in range(10)])
        model = ModelSpec(
            basis=basis, one_body=chain,
            centers=np.array([[p] for p in positions[2:8]]),
            interaction=gaussian_interaction(0.15), sigma=1.0, quad_weight=3.0,
        )
        H = model.hamiltonian()
        gs = ground_state(H)
        assert gs.gap > 0.1
        A = creation_operator(basis.modes[0], basis)
        vals = []
        for j in (1, 5, 9):
            B = annihilation_operator(basis.modes[j], basis)
            vals.append(abs(clustering_probe(H, A, B, 1.0)))
        assert vals[0] >= vals[1] >= vals[2] - 1e-12


class TestVolumeConvergence:
    def test_equal_masks_zero_difference(self):
        m1 = small_model(0.4)
        m2 = small_model(0.4)
        rows = nested_volume_differences([m1, m2], m1.basis.modes[2], [0.5])
        assert all(d < 1e-10 for _, _, d in rows)

    def test_free_interaction_zero_difference(self):
        m1 = small_model(0.0, centers=[[-1.5]])
        m2 = small_model(0.0, centers=[[-1.5], [1.5]])
        rows = nested_volume_differences([m1, m2], m1.basis.modes[2], [1.0])
        assert all(d < 1e-12 for _, _, d in rows)

    def test_differences_shrink_with_volume(self):
        # growing center sets on the mode lattice; f deep inside the first volume
        grid = Grid(1, 512, 96.0)
        positions = (-10.5, -7.5, -4.5, -1.5, 1.5, 4.5, 7.5, 10.5)
        seeds = [make_gaussian(grid, 1.0, [p], "l2") for p in positions]
        basis = gram_schmidt_basis(grid, seeds)
        T = assemble(grid, 0.5, GridFunction(grid, np.zeros(grid.size)))
        center_sets = [
            [[-1.5], [1.5]],
            [[-4.5], [-1.5], [1.5], [4.5]],
            [[-7.5], [-4.5], [-1.5], [1.5], [4.5], [7.5]],
            [[-10.5], [-7.5], [-4.5], [-1.5], [1.5], [4.5], [7.5], [10.5]],
        ]
        models = [
            ModelSpec.from_onebody(
                basis, T, gaussian_interaction(0.4), sigma=1.0,
                centers=cs, quad_weight=3.0,
            )
            for cs in center_sets
        ]
        f = basis.modes[3]
        rows = nested_volume_differences(models, f, [1.0])
        diffs = [d for _, _, d in rows]
        assert diffs[2] <= 0.2 * diffs[0]

    def test_non_nested_rejected(self):
        m1 = small_model(0.4, centers=[[-1.5], [1.5]])
        m2 = small_model(0.4, centers=[[4.5]])
        with pytest.raises(ConfigError):
            nested_volume_differences([m1, m2], m1.basis.modes[0], [0.5])
