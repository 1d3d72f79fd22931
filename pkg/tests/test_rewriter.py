import numpy as np
import pytest

from lightcone_lab import (
    Grid,
    HypothesisError,
    expand_commutator,
    direct_bracket,
    gram_schmidt_basis,
    make_gaussian,
    materialize,
)
from lightcone_lab.rewriter import Slot


@pytest.fixture(scope="module")
def basis8():
    grid = Grid(1, 256, 48.0)
    positions = np.arange(-10.5, 11.0, 3.0)
    seeds = [make_gaussian(grid, 1.0, [p], "l2") for p in positions]
    return gram_schmidt_basis(grid, seeds)


def random_generators(rng, count, basis):
    out = []
    for _ in range(count):
        kind = "a" if rng.uniform() < 0.5 else "adag"
        coeffs = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
        coeffs /= np.linalg.norm(coeffs)
        out.append((kind, coeffs))
    return out


class TestExpansionStructure:
    def test_single_vs_pair_commutator(self):
        # [a, b1 b2] = {a, b1} b2 - b1 {a, b2}
        expr = expand_commutator(1, 2, "commutator")
        assert len(expr.terms) == 2
        first, second = expr.terms
        assert first.sign == 1 and first.anchor == (1, 1)
        assert first.factors == (Slot("b", 2),)
        assert second.sign == -1 and second.anchor == (1, 2)
        assert second.factors == (Slot("b", 1),)

    def test_single_anticommutator(self):
        expr = expand_commutator(1, 1, "anticommutator")
        assert len(expr.terms) == 1
        assert expr.terms[0].sign == 1
        assert expr.terms[0].factors == ()

    def test_term_count(self):
        assert len(expand_commutator(2, 3, "commutator").terms) == 6
        assert len(expand_commutator(3, 4, "commutator").terms) == 12
        assert len(expand_commutator(3, 3, "anticommutator").terms) == 9

    def test_parity_hypotheses(self):
        with pytest.raises(HypothesisError):
            expand_commutator(1, 3, "commutator")
        with pytest.raises(HypothesisError):
            expand_commutator(2, 2, "anticommutator")
        with pytest.raises(HypothesisError):
            expand_commutator(1, 2, "anticommutator")


class TestMaterialization:
    @pytest.mark.parametrize(
        "n_left,n_right,mode",
        [
            (1, 2, "commutator"),
            (2, 2, "commutator"),
            (2, 1, "commutator"),
            (2, 3, "commutator"),
            (4, 2, "commutator"),
            (3, 4, "commutator"),
            (1, 1, "anticommutator"),
            (1, 3, "anticommutator"),
            (3, 1, "anticommutator"),
            (3, 3, "anticommutator"),
        ],
    )
    def test_matches_direct_bracket(self, basis8, n_left, n_right, mode):
        rng = np.random.default_rng(hash((n_left, n_right, mode)) % 2**32)
        expr = expand_commutator(n_left, n_right, mode)
        for _ in range(3):
            left = random_generators(rng, n_left, basis8)
            right = random_generators(rng, n_right, basis8)
            symbolic = materialize(expr, left, right, basis8).dense()
            direct = direct_bracket(left, right, basis8, mode).dense()
            assert np.abs(symbolic - direct).max() < 1e-12
