import math

import numpy as np
import pytest

from lightcone_lab import (
    BoundParams,
    DivergenceError,
    Grid,
    GridFunction,
    HypothesisError,
    InteractionSpec,
    NormCalculator,
    SmoothFunctionSpec,
    assemble,
    bracket,
    convolution_decay_check,
    cutoff_norm_bound,
    decay_envelope,
    interaction_kernel,
    iteration_series_terms,
    make_gaussian,
    manybody_time_envelope,
    pair_envelope_integral,
    power_weight_integral,
    time_moment_inequality_check,
    weighted_derivative_norm,
)
from lightcone_lab.bounds import envelope_total_integral, odd_double_factorial
from lightcone_lab.onebody import EnergyCutoff
from lightcone_lab.smoothstep import smoothstep_sup_norms


def default_params(**overrides):
    base = dict(
        n=2, delta=0.5, sigma=1.0, alpha=2.0, n_V=8, n_W=4, c_W=1.0, W_l1=1.0
    )
    base.update(overrides)
    return BoundParams(**base)


class TestBoundParams:
    def test_exponent_constraint(self):
        with pytest.raises(HypothesisError):
            default_params(n=5, n_V=8, n_W=8)  # n > n_V / 2

    def test_positivity(self):
        with pytest.raises(Exception):
            default_params(delta=-0.1)

    def test_derived_mb_constants(self):
        p = default_params(C_ob0=2.0, C_nW=3.0, C_phi=5.0)
        q = p.with_derived_mb_constants(phi_l2=2.0)
        assert q.C_mb1 == pytest.approx(2 * 4 * 3)
        assert q.C_mb2 == pytest.approx(2 * 3 * 5 * 16)


class TestWeightedDerivativeNorm:
    def test_zero_function(self):
        spec = SmoothFunctionSpec([lambda x: 0.0] * 5, decays_at_infinity=True)
        assert weighted_derivative_norm(spec, 2, 1.0) == 0.0

    def test_constant_function_n0_p2(self):
        # only the k=0 term survives: int <x>^-3 dx = 2 (antiderivative x/sqrt(1+x^2))
        spec = SmoothFunctionSpec(
            [lambda x: 1.0, lambda x: 0.0, lambda x: 0.0],
            derivative_support=(-1.0, 1.0),
        )
        assert weighted_derivative_norm(spec, 0, 2.0) == pytest.approx(2.0, rel=1e-8)

    def test_divergence_detected(self):
        spec = SmoothFunctionSpec([lambda x: 1.0] * 3)
        with pytest.raises(DivergenceError):
            weighted_derivative_norm(spec, 0, 2.0)

    def test_norm_calculator_wrapper(self):
        spec = SmoothFunctionSpec(
            [lambda x: 1.0, lambda x: 0.0, lambda x: 0.0],
            derivative_support=(-1.0, 1.0),
        )
        assert NormCalculator(0, 2.0).evaluate(spec) == pytest.approx(2.0, rel=1e-8)


class TestPowerWeightIntegral:
    def test_k2_closed_form(self):
        assert power_weight_integral(2.0) == pytest.approx(2.0, abs=1e-10)

    def test_k1_is_pi(self):
        assert power_weight_integral(1.0) == pytest.approx(math.pi, abs=1e-10)

    def test_monotone(self):
        assert power_weight_integral(3.0) < power_weight_integral(2.0)

    def test_divergence(self):
        with pytest.raises(DivergenceError):
            power_weight_integral(0.0)


def window_norm_spec(cutoff: EnergyCutoff, n: int) -> SmoothFunctionSpec:
    derivs = [cutoff] + [
        (lambda k: (lambda x: float(cutoff.derivatives(float(x), k)[k])))(k)
        for k in range(1, n + 3)
    ]
    return SmoothFunctionSpec(
        derivatives=derivs,
        derivative_support=cutoff.derivative_support(),
        decays_at_infinity=False,
    )


class TestCutoffNormBound:
    def test_constant_window_keeps_only_leading_term(self):
        sups = [3.0] + [0.0] * 6
        val = cutoff_norm_bound(sups, alpha=2.0, E=1.0, n=2, p=2.0)
        assert val == pytest.approx(3.0 * power_weight_integral(2.0), rel=1e-10)

    def test_dominates_weighted_norm(self):
        # the k=0 term of the norm needs p>0 decay, supplied by the window's
        # (-inf, alpha E] plateau: integrable against <x>^(-p-1) for p > 0
        n, p = 2, 1.0
        cutoff = EnergyCutoff(E=1.0, alpha=2.0)
        sups = smoothstep_sup_norms(n + 2)
        bound = cutoff_norm_bound(sups, 2.0, 1.0, n, p)
        norm = weighted_derivative_norm(window_norm_spec(cutoff, n), n, p)
        assert bound >= norm > 0

    def test_lattice_domination(self):
        sups = smoothstep_sup_norms(5)
        for E in (1.0, 4.0, 16.0):
            for n in (1, 2, 3):
                for p in (0.5, 1.0, 2.0):
                    cutoff = EnergyCutoff(E=E, alpha=2.0)
                    bound = cutoff_norm_bound(sups, 2.0, E, n, p)
                    norm = weighted_derivative_norm(window_norm_spec(cutoff, n), n, p)
                    assert bound >= norm

    def test_non_increasing_in_energy(self):
        sups = smoothstep_sup_norms(4)
        vals = [cutoff_norm_bound(sups, 2.0, E, 2, 1.0) for E in (1.0, 2.0, 4.0, 8.0)]
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-12


class TestConvolutionDecay:
    def test_fitted_constant_below_cap(self):
        fit = convolution_decay_check(1.0, 2, 1.0, 1.0, 2, 1.0, cap=32.0)
        assert fit.passed
        assert fit.fitted_c <= 32.0

    def test_value_at_origin_bounded_by_mass(self):
        # |f*g|(0) <= c_f c_g int (1 v |y|)^{-2} dy = c_f c_g * (2 + 2) = 4
        grid = Grid(1, 2048, 128.0)
        r = grid.distances_to([0.0])
        f = GridFunction(grid, np.minimum(1.0, 1.0 / np.maximum(r, 1e-300)) ** 2)
        from lightcone_lab import periodic_convolve

        conv = periodic_convolve(f, f)
        origin = np.argmin(r)
        assert conv.values[origin].real <= 4.0 + 1e-6

    def test_even_in_x(self):
        grid = Grid(1, 1024, 128.0)
        r = grid.distances_to([0.0])
        f = GridFunction(grid, np.minimum(1.0, 1.0 / np.maximum(r, 1e-300)) ** 2)
        from lightcone_lab import periodic_convolve, reflect

        conv = periodic_convolve(f, f)
        assert np.abs(conv.values - reflect(conv).values).max() < 1e-12

    def test_hypothesis_violation(self):
        with pytest.raises(HypothesisError):
            convolution_decay_check(1.0, 1, 1.0, 1.0, 2, 1.0, dimension=1)


class TestTimeMomentInequality:
    def test_alpha_beta_one(self):
        ok, worst = time_moment_inequality_check(1.0, 1.0, 0, [1.0])
        assert ok and worst <= 1.0 + 1e-9

    def test_small_t_ratio_tends_to_one(self):
        ok, worst = time_moment_inequality_check(1.0, 1.0, 0, [1e-4])
        assert ok
        assert worst == pytest.approx(1.0, abs=1e-4)

    def test_spec_sweep(self):
        ok, _ = time_moment_inequality_check(1.0 + 2 * 0.5, 2.0, 3, [2.0])
        assert ok

    def test_full_grid(self):
        ok, worst = time_moment_inequality_check(2.0, 3.0, 1, np.linspace(0.1, 4.0, 12))
        assert ok and worst <= 1.0 + 1e-9


GRID = Grid(1, 256, 32.0)


def gaussian_interaction(strength=1.0, width=1.0, n_W=4):
    profile = lambda r: strength * np.exp(-np.asarray(r) ** 2 / (2 * width**2))
    # envelope constant: sup over r >= 1 of exp(-r^2/2w^2) r^{n_W}, and 1 at r <= 1
    rs = np.linspace(0.0, 20.0, 4001)
    c = strength * float(
        np.max(np.exp(-(rs**2) / (2 * width**2)) * np.maximum(rs, 1.0) ** n_W)
    )
    return InteractionSpec(profile=profile, c_W=c * 1.0001, n_W=n_W)


class TestInteractionSpec:
    def test_hypothesis_check_passes_for_gaussian(self):
        gaussian_interaction().check_hypothesis(GRID)

    def test_envelope_violation_detected(self):
        bad = InteractionSpec(profile=lambda r: np.ones_like(np.asarray(r)), c_W=0.5, n_W=2)
        with pytest.raises(HypothesisError):
            bad.check_hypothesis(GRID)


class TestInteractionKernel:
    def test_zero_interaction_gives_zero(self):
        op = assemble(GRID, 0.5, GridFunction(GRID, np.zeros(GRID.size)))
        phi = make_gaussian(GRID, 1.0, [0.0])
        f = make_gaussian(GRID, 1.0, [2.0], "l2")
        W = InteractionSpec(profile=lambda r: np.zeros_like(np.asarray(r)), c_W=1.0, n_W=4)
        K = interaction_kernel(op, f, W, phi, 0.5)
        assert K.linf_norm() < 1e-14

    def test_point_mass_interaction(self):
        # single-cell W of mass w: K_t(x) = 2 w |<e^{-itT} f, phi_x>|
        op = assemble(GRID, 0.5, GridFunction(GRID, np.zeros(GRID.size)))
        phi = make_gaussian(GRID, 1.0, [0.0])
        f = make_gaussian(GRID, 1.0, [1.0], "l2")
        w_mass = 0.7
        origin = np.argmin(GRID.distances_to([0.0]))

        def point_profile(r):
            r = np.asarray(r, dtype=float)
            return np.where(r < GRID.spacing / 2, w_mass / GRID.cell_volume, 0.0)

        W = InteractionSpec(profile=point_profile, c_W=w_mass / GRID.cell_volume, n_W=4)
        t = 0.4
        K = interaction_kernel(op, f, W, phi, t)
        from lightcone_lab.bounds import overlap_field

        overlaps = overlap_field(op, f, phi, t)
        expected = 2 * w_mass * np.abs(overlaps.values)
        assert np.abs(K.values.real - expected).max() < 1e-10 * expected.max()


class TestManybodyTimeEnvelope:
    def test_zero_at_time_zero(self):
        assert manybody_time_envelope(0.0, default_params(), 1) == 0.0

    def test_even_in_time(self):
        p = default_params()
        assert manybody_time_envelope(1.3, p, 1) == manybody_time_envelope(-1.3, p, 1)

    def test_monotone_increasing(self):
        p = default_params()
        ts = np.linspace(0.05, 2.0, 30)  # stay below the overflow horizon
        vals = [manybody_time_envelope(t, p, 1) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_overflow_saturates(self):
        p = default_params(C_mb2=1e3)
        with pytest.warns(RuntimeWarning):
            assert manybody_time_envelope(50.0, p, 2) == math.inf


class TestPairEnvelopeIntegral:
    def test_far_disjoint_supports(self):
        grid = Grid(1, 512, 64.0)
        f = GridFunction(grid, (grid.distances_to([-10.0]) <= 0.5).astype(complex))
        g = GridFunction(grid, (grid.distances_to([10.0]) <= 0.5).astype(complex))
        f, g = f.normalized(), g.normalized()
        t = 0.5
        val = pair_envelope_integral(f, g, 4, t)
        expected = (bracket(t) / 20.0) ** 4
        assert val == pytest.approx(expected, rel=0.15)

    def test_overlapping_supports_bounded_by_one(self):
        f = make_gaussian(GRID, 1.0, [0.0], "l2")
        g = make_gaussian(GRID, 1.0, [0.5], "l2")
        val = pair_envelope_integral(f, g, 2, 1.0)
        assert val <= 1.0 + 1e-10

    def test_swap_symmetry(self):
        f = make_gaussian(GRID, 1.0, [-2.0], "l2")
        g = make_gaussian(GRID, 1.5, [3.0], "l2")
        a = pair_envelope_integral(f, g, 2, 0.7)
        b = pair_envelope_integral(g, f, 2, 0.7)
        assert a == pytest.approx(b, rel=1e-12)

    def test_2d_agreement(self):
        grid = Grid(2, 32, 16.0)
        rng = np.random.default_rng(0)
        f = GridFunction(grid, rng.standard_normal(grid.size)).normalized()
        g = GridFunction(grid, rng.standard_normal(grid.size)).normalized()
        val = pair_envelope_integral(f, g, 3, 0.5)  # double-sum consistency inside
        assert val > 0


class TestSeriesTerms:
    def test_zero_time(self):
        f = make_gaussian(GRID, 1.0, [0.0], "l2")
        g = make_gaussian(GRID, 1.0, [3.0], "l2")
        series = iteration_series_terms(6, 0.0, default_params(), 1.0, f, g, 1)
        assert all(s == 0.0 for s in series.main_terms)

    def test_factorial_domination(self):
        f = make_gaussian(GRID, 1.0, [0.0], "l2")
        g = make_gaussian(GRID, 1.0, [3.0], "l2")
        series = iteration_series_terms(20, 1.0, default_params(), 1.0, f, g, 1)
        ratios = [
            series.main_terms[k + 1] / series.main_terms[k]
            for k in range(12, 19)
            if series.main_terms[k] > 0
        ]
        assert all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
        assert series.converged
        assert series.remainders[-1] < series.remainders[-2]

    def test_resummed_series_below_envelope(self):
        # sum_k S_{k+1} <= Xi_mb(t) * pair envelope with the derived constants
        f = make_gaussian(GRID, 1.0, [-0.5], "l2")
        g = make_gaussian(GRID, 1.0, [2.0], "l2")
        phi_l2 = make_gaussian(GRID, 1.0, [0.0], "l1").l2_norm()
        params = default_params().with_derived_mb_constants(phi_l2)
        for t in (0.5, 1.0, 2.0):
            series = iteration_series_terms(25, t, params, phi_l2, f, g, 1)
            total = sum(series.main_terms[1:])  # S_{k+1} for k >= 1
            envelope = manybody_time_envelope(t, params, 1) * pair_envelope_integral(
                f, g, params.n, t
            )
            assert total <= envelope * (1 + 1e-10)

    def test_k_max_cap(self):
        f = make_gaussian(GRID, 1.0, [0.0], "l2")
        with pytest.raises(Exception):
            iteration_series_terms(50, 1.0, default_params(), 1.0, f, f, 1)

    def test_odd_double_factorial(self):
        assert [odd_double_factorial(k) for k in (1, 2, 3, 4)] == [1, 3, 15, 105]


class TestEnvelopeTotalIntegral:
    def test_1d_closed_form(self):
        # int G_{n,t} dr = 2<t> (1 + 1/(n-1))
        t, n = 1.0, 4
        expected = 2 * bracket(t) * (1 + 1 / (n - 1))
        assert envelope_total_integral(n, t, 1) == pytest.approx(expected, rel=1e-8)

    def test_needs_decay(self):
        with pytest.raises(HypothesisError):
            envelope_total_integral(1, 1.0, 1)
