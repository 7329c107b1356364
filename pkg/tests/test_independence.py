import os
import sys
from fractions import Fraction as F
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from indep_independence import (
    FewerThanTwo,
    certify_by_positive_measure,
    check_logical_independence,
    check_logical_independence_bruteforce,
    check_probabilistic_independence,
    check_sigma_logical_independence,
)
from indep_space import AtomMeasure, generate_sigma_algebra, make_space
from strategies import independent_families, random_families
from utils.errors import MeasureMismatch, NotAProbability, SpaceMismatch, TooLarge, TrivialAlgebra


class TestLogicalIndependence:
    """Tests for the block-tuple criterion."""

    def test_coin_algebras_are_independent(self, coin_algebras):
        """sigma(A) and sigma(B) meet in every block pair."""
        verdict = check_logical_independence(coin_algebras)
        assert verdict.independent
        assert verdict.witness is None
        assert check_sigma_logical_independence(coin_algebras).independent

    def test_algebra_with_itself_is_dependent(self, coin_algebras, coin_events):
        """A and its complement never meet; the witness is the first empty block tuple."""
        s_a = coin_algebras[0]
        verdict = check_logical_independence([s_a, s_a])
        assert not verdict.independent
        assert verdict.witness == ((0, coin_events["A"]), (1, coin_events["A"].complement()))
        assert verdict.witness_intersection().is_empty()

    def test_nested_events_are_dependent(self, coin_space, coin_algebras):
        """sigma({HH}) and sigma(A): {HH} and not-A are disjoint."""
        s_hh = generate_sigma_algebra(coin_space, [coin_space.event(["HH"])])
        verdict = check_logical_independence([s_hh, coin_algebras[0]])
        assert not verdict.independent
        assert verdict.witness_intersection().is_empty()

    def test_family_validation(self, coin_space, coin_algebras):
        """Fewer than two algebras, trivial algebras and mixed spaces are errors."""
        with pytest.raises(FewerThanTwo):
            check_logical_independence(coin_algebras[:1])
        trivial = generate_sigma_algebra(coin_space, [])
        with pytest.raises(TrivialAlgebra):
            check_logical_independence([coin_algebras[0], trivial])
        other = make_space(["x", "y"])
        foreign = generate_sigma_algebra(other, [other.event(["x"])])
        with pytest.raises(SpaceMismatch):
            check_logical_independence([coin_algebras[0], foreign])

    def test_bruteforce_budget(self, coin_algebras):
        """The literal oracle refuses families beyond its budget."""
        with pytest.raises(TooLarge):
            check_logical_independence_bruteforce(coin_algebras, budget=3)
        assert check_logical_independence_bruteforce(coin_algebras, budget=4).independent

    @settings(max_examples=1000)
    @given(st.one_of(random_families(), independent_families(min_algebras=2, max_algebras=4)))
    def test_matches_bruteforce_oracle(self, instance):
        """Block-tuple criterion and literal definition agree on every instance."""
        _, algebras = instance
        fast = check_logical_independence(algebras)
        slow = check_logical_independence_bruteforce(algebras)
        assert fast.independent == slow.independent
        if not fast.independent:
            assert fast.witness_intersection().is_empty()
            assert slow.witness_intersection().is_empty()

    @settings(max_examples=300)
    @given(independent_families(min_algebras=2, max_algebras=4))
    def test_subfamilies_stay_independent(self, instance):
        """Every subfamily of two or more algebras of an independent family is independent."""
        _, algebras = instance
        assert check_logical_independence(algebras).independent
        for size in range(2, len(algebras) + 1):
            for subset in combinations(algebras, size):
                assert check_logical_independence(list(subset)).independent


class TestProbabilisticIndependence:
    """Tests for the product rule."""

    def test_p1_and_p2_make_coin_independent(self, coin_algebras, coin_measures):
        """Both tabulated measures satisfy P(A & B) = P(A) P(B)."""
        assert check_probabilistic_independence(coin_algebras, coin_measures["P1"]).independent
        assert check_probabilistic_independence(coin_algebras, coin_measures["P2"]).independent

    def test_mixture_breaks_independence(self, coin_algebras, coin_measures, coin_events):
        """Under P3, P(A & B) = 3/16 while P(A) P(B) = 1/4."""
        verdict = check_probabilistic_independence(coin_algebras, coin_measures["P3"])
        assert not verdict.independent
        assert verdict.joint == F(3, 16)
        assert verdict.product == F(1, 4)
        assert verdict.witness == ((0, coin_events["A"]), (1, coin_events["B"]))

    def test_measure_must_be_probability(self, coin_space, coin_algebras):
        """Mass other than 1 is refused."""
        half = AtomMeasure(coin_space, (F(1, 8),) * 4)
        with pytest.raises(NotAProbability):
            check_probabilistic_independence(coin_algebras, half)

    def test_measure_on_other_space(self, coin_algebras):
        """The measure must live on the algebras' space."""
        other = make_space(["a", "b", "c", "d"])
        with pytest.raises(MeasureMismatch):
            check_probabilistic_independence(coin_algebras, AtomMeasure(other, (F(1, 4),) * 4))

    def test_single_algebra_is_vacuously_independent(self, coin_algebras, coin_measures):
        """No subfamily of size two exists."""
        assert check_probabilistic_independence(coin_algebras[:1], coin_measures["P3"]).independent


class TestPositiveCertificate:
    """Tests for certifying logical independence through a positive product measure."""

    def test_p1_certifies_coin(self, coin_algebras, coin_measures):
        """P1 is independent with every block positive."""
        assert certify_by_positive_measure(coin_algebras, coin_measures["P1"])

    def test_point_mass_does_not_certify(self, coin_space, coin_algebras):
        """A point mass is independent but gives blocks zero probability."""
        point = AtomMeasure.from_labels(coin_space, {"TH": 1})
        assert check_probabilistic_independence(coin_algebras, point).independent
        assert not certify_by_positive_measure(coin_algebras, point)
