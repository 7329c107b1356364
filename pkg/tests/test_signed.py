import os
import sys
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from indep_independence import check_probabilistic_independence
from indep_signed import (
    NotSigmaLogicallyIndependent,
    SignedMeasure,
    check_independence_signed,
    check_uniform_independence,
    jordan_decompose,
)
from indep_space import AtomMeasure, make_space
from utils.errors import NotAProbability, ZeroMeasure

rationals = st.builds(F, st.integers(-12, 12), st.integers(1, 6))


class TestJordanDecomposition:
    """Tests for the positive and negative parts of a signed measure."""

    def test_difference_of_coin_measures(self, coin_measures):
        """P1 - P2 is +1/2 on TH and -1/2 on HT."""
        mu = SignedMeasure.from_measures([(1, coin_measures["P1"]), (-1, coin_measures["P2"])])
        pair = jordan_decompose(mu)
        assert pair.positive.weights == (0, 0, F(1, 2), 0)
        assert pair.negative.weights == (0, F(1, 2), 0, 0)
        assert pair.hahn_positive_set.labels() == ["HH", "TH", "TT"]
        assert mu.total_variation() == 1

    def test_nonnegative_and_zero(self, coin_space, coin_measures):
        """A measure has no negative part; zero has neither."""
        pair = jordan_decompose(SignedMeasure(coin_space, coin_measures["P1"].weights))
        assert pair.negative.total() == 0
        zero = jordan_decompose(SignedMeasure(coin_space, (F(0),) * 4))
        assert zero.positive.total() == zero.negative.total() == 0
        assert zero.hahn_positive_set.is_omega()

    @settings(max_examples=500)
    @given(st.data())
    def test_reconstruction_singularity_minimality(self, data):
        """mu+ - mu- = mu, disjoint supports, and any other split dominates atom-wise."""
        weights = data.draw(st.lists(rationals, min_size=1, max_size=8))
        space = make_space([f"w{i}" for i in range(len(weights))])
        mu = SignedMeasure(space, tuple(weights))
        pair = jordan_decompose(mu)

        assert tuple(p - n for p, n in zip(pair.positive.weights, pair.negative.weights)) == mu.atom_weight
        assert (pair.positive.support() & pair.negative.support()).is_empty()
        assert pair.positive.support().issubset(pair.hahn_positive_set)
        assert (pair.negative.support() & pair.hahn_positive_set).is_empty()

        for _ in range(10):
            # any nonnegative pair with nu+ - nu- = mu is (mu+ + s, mu- + s) for some s >= 0
            shift = data.draw(st.lists(st.builds(F, st.integers(0, 9), st.integers(1, 4)), min_size=len(weights), max_size=len(weights)))
            nu_plus = tuple(w + s if w > 0 else s for w, s in zip(weights, shift))
            nu_minus = tuple(-w + s if w < 0 else s for w, s in zip(weights, shift))
            assert tuple(p - n for p, n in zip(nu_plus, nu_minus)) == mu.atom_weight
            assert all(a >= b for a, b in zip(nu_plus, pair.positive.weights))
            assert all(a >= b for a, b in zip(nu_minus, pair.negative.weights))


class TestSignedIndependence:
    """Independence under both Jordan parts."""

    def test_difference_of_independent_measures(self, coin_algebras, coin_measures):
        """Both parts of P1 - P2 are point masses, which satisfy the product rule."""
        mu = SignedMeasure.from_measures([(1, coin_measures["P1"]), (-1, coin_measures["P2"])])
        verdict = check_independence_signed(coin_algebras, mu)
        assert verdict.independent
        assert verdict.positive.independent and verdict.negative.independent

    def test_nonnegative_reduces_to_probabilistic(self, coin_space, coin_algebras, coin_measures):
        """A probability's negative part is zero and vacuous."""
        p1 = SignedMeasure(coin_space, coin_measures["P1"].weights)
        verdict = check_independence_signed(coin_algebras, p1)
        assert verdict.independent and verdict.negative is None
        p3 = SignedMeasure(coin_space, coin_measures["P3"].weights)
        assert not check_independence_signed(coin_algebras, p3).independent

    def test_scale_does_not_matter(self, coin_algebras, coin_measures):
        """Parts are normalized, so 3 P1 behaves like P1."""
        mu = SignedMeasure.from_measures([(3, coin_measures["P1"])])
        assert check_independence_signed(coin_algebras, mu).independent

    def test_zero_measure(self, coin_space, coin_algebras):
        """Both parts zero is an error."""
        with pytest.raises(ZeroMeasure):
            check_independence_signed(coin_algebras, SignedMeasure(coin_space, (F(0),) * 4))

    def test_dependent_family(self, coin_algebras, coin_measures):
        """The family itself must be sigma-logically independent."""
        s_a = coin_algebras[0]
        mu = SignedMeasure.from_measures([(1, coin_measures["P1"])])
        with pytest.raises(NotSigmaLogicallyIndependent) as excinfo:
            check_independence_signed([s_a, s_a], mu)
        assert not excinfo.value.verdict.independent


class TestUniformIndependence:
    """Independence under every measure of a family."""

    def test_p1_and_p2(self, coin_algebras, coin_measures):
        """Both tabulated measures pass."""
        assert check_uniform_independence(coin_algebras, [coin_measures["P1"], coin_measures["P2"]]).independent

    def test_p3_fails(self, coin_algebras, coin_measures):
        """P3 is named as the failing measure."""
        verdict = check_uniform_independence(
            coin_algebras, [coin_measures["P1"], coin_measures["P2"], coin_measures["P3"]]
        )
        assert not verdict.independent
        assert verdict.failing_measure == 2
        assert verdict.witness.joint == F(3, 16)

    def test_empty_family_of_measures(self, coin_algebras):
        """No measures, nothing to violate."""
        assert check_uniform_independence(coin_algebras, []).independent

    def test_singleton_matches_probabilistic(self, coin_algebras, coin_measures):
        """One measure is the plain product-rule check."""
        for q in coin_measures.values():
            assert (
                check_uniform_independence(coin_algebras, [q]).independent
                == check_probabilistic_independence(coin_algebras, q).independent
            )

    def test_measures_must_be_probabilities(self, coin_space, coin_algebras):
        """Mass other than 1 is refused."""
        with pytest.raises(NotAProbability):
            check_uniform_independence(coin_algebras, [AtomMeasure(coin_space, (F(1),) * 4)])
