import os
import sys
from fractions import Fraction as F

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from indep_space import (
    AtomMeasure,
    DuplicateLabel,
    EmptySpace,
    TooManyAtoms,
    UnknownAtom,
    enumerate_members,
    generate_sigma_algebra,
    join,
    make_space,
    mixture,
)
from utils.errors import NotAProbability, SpaceMismatch, TooLarge, ZeroMeasure


class TestMakeSpace:
    """Tests for building finite spaces."""

    def test_atom_indices_follow_listed_order(self, coin_space):
        """Atom i is the i-th listed label."""
        assert coin_space.atom_count == 4
        assert coin_space.index("TH") == 2
        assert coin_space.full_mask == 0b1111

    def test_rejects_duplicates_and_empty(self):
        """Duplicate labels and empty label lists are refused."""
        with pytest.raises(DuplicateLabel):
            make_space(["a", "b", "a"])
        with pytest.raises(EmptySpace):
            make_space([])

    def test_default_profile_limit(self):
        """More than 64 atoms needs the wide profile."""
        labels = [f"w{i}" for i in range(65)]
        with pytest.raises(TooManyAtoms):
            make_space(labels)
        assert make_space(labels, max_atoms=None).atom_count == 65

    def test_unknown_label(self, coin_space):
        """Events may only name declared atoms."""
        with pytest.raises(UnknownAtom):
            coin_space.event(["HX"])


class TestEventSet:
    """Tests for bitmask event arithmetic."""

    def test_boolean_operations(self, coin_space, coin_events):
        """Intersection, union, difference and complement act on atom sets."""
        a, b = coin_events["A"], coin_events["B"]
        assert (a & b).labels() == ["HH"]
        assert (a | b).labels() == ["HH", "HT", "TH"]
        assert (a - b).labels() == ["HT"]
        assert a.complement().labels() == ["TH", "TT"]
        assert repr(a) == "{HH,HT}"

    def test_predicates(self, coin_space, coin_events):
        """Empty, Omega and nontrivial are mutually exclusive."""
        assert coin_space.empty.is_empty()
        assert coin_space.omega.is_omega()
        assert coin_events["A"].is_nontrivial()
        assert not coin_space.omega.is_nontrivial()
        assert coin_events["A"].issubset(coin_space.omega)
        assert len(coin_events["A"]) == 2
        assert list(coin_events["B"]) == [0, 2]

    def test_spaces_do_not_mix(self, coin_events):
        """Events from different spaces cannot be combined."""
        other = make_space(["HH", "HT", "TH", "TT", "X"]).event(["HH"])
        with pytest.raises(SpaceMismatch):
            coin_events["A"] & other


class TestSigmaAlgebra:
    """Tests for partition algebras."""

    def test_generated_blocks_are_canonical(self, coin_space, coin_events):
        """Blocks come out sorted by their least atom."""
        alg = generate_sigma_algebra(coin_space, [coin_events["B"]])
        assert [b.labels() for b in alg.blocks] == [["HH", "TH"], ["HT", "TT"]]
        assert alg.is_nontrivial()

    def test_no_generators_gives_trivial_algebra(self, coin_space):
        """With no generators only Omega remains as a block."""
        alg = generate_sigma_algebra(coin_space, [])
        assert alg.blocks == (coin_space.omega,)
        assert not alg.is_nontrivial()

    def test_join_of_coin_algebras_is_discrete(self, coin_space, coin_algebras):
        """sigma(A) v sigma(B) separates all four outcomes."""
        joined = join(coin_algebras)
        assert [b.labels() for b in joined.blocks] == [["HH"], ["HT"], ["TH"], ["TT"]]

    def test_membership_and_saturation(self, coin_space, coin_algebras, coin_events):
        """Members are unions of blocks; saturation is the smallest member above an event."""
        s_a = coin_algebras[0]
        assert s_a.contains(coin_events["A"])
        assert not s_a.contains(coin_events["B"])
        assert s_a.saturation(coin_space.event(["HT"])) == coin_events["A"]
        assert s_a.saturation(coin_events["B"]) == coin_space.omega
        assert s_a.block_index_of(coin_space.index("TT")) == 1

    def test_enumerate_members(self, coin_algebras):
        """Members come in binary-counter order over the blocks."""
        members = list(enumerate_members(coin_algebras[0]))
        assert [m.labels() for m in members] == [[], ["HH", "HT"], ["TH", "TT"], ["HH", "HT", "TH", "TT"]]

    def test_coin_generators_give_singletons(self, coin_space, coin_events):
        """sigma({HH,HT}, {HH,TH}) has the four outcomes as blocks."""
        alg = generate_sigma_algebra(coin_space, [coin_events["A"], coin_events["B"]])
        assert [b.labels() for b in alg.blocks] == [["HH"], ["HT"], ["TH"], ["TT"]]

    def test_three_blocks_give_eight_members(self):
        """A 3-block algebra has 2^3 members."""
        space = make_space(["a", "b", "c", "d"])
        alg = generate_sigma_algebra(space, [space.event(["a"]), space.event(["b", "c"])])
        assert len(alg.blocks) == 3
        assert len({m.members for m in enumerate_members(alg)}) == 8

    @pytest.mark.parametrize("m", range(1, 7))
    def test_generation_exhaustively(self, m):
        """For every pair of single generators: idempotence and join == generation from the union."""
        space = make_space([f"w{i}" for i in range(m)])
        events = [space.event_from_indices(i for i in range(m) if mask >> i & 1) for mask in range(1 << m)]
        single = {e.members: generate_sigma_algebra(space, [e]) for e in events}
        for alg in single.values():
            assert generate_sigma_algebra(space, list(alg.blocks)) == alg
        for g1 in events:
            for g2 in events:
                both = generate_sigma_algebra(space, [g1, g2])
                assert join([single[g1.members], single[g2.members]]) == both
                assert generate_sigma_algebra(space, list(both.blocks)) == both

    def test_join_identities(self, coin_space, coin_algebras):
        """Joining one algebra, or joining with the trivial algebra, changes nothing."""
        trivial = generate_sigma_algebra(coin_space, [])
        for alg in coin_algebras:
            assert join([alg]) == alg
            assert join([alg, trivial]) == alg
            assert join([trivial, alg]) == alg

    @pytest.mark.parametrize("m", range(1, 6))
    def test_members_form_an_algebra(self, m):
        """2^#blocks distinct members, closed under complement and union."""
        space = make_space([f"w{i}" for i in range(m)])
        for mask in range(1 << m):
            generator = space.event_from_indices(i for i in range(m) if mask >> i & 1)
            other = space.event_from_indices(i for i in range(m) if (mask * 7 + 3) >> i & 1)
            alg = generate_sigma_algebra(space, [generator, other])
            found = {e.members for e in enumerate_members(alg)}
            assert len(found) == 2 ** len(alg.blocks)
            for x in found:
                assert space.full_mask & ~x in found
                for y in found:
                    assert x | y in found

    def test_enumeration_limit(self):
        """Algebras with too many blocks refuse to enumerate."""
        space = make_space([f"w{i}" for i in range(5)])
        discrete = generate_sigma_algebra(space, [space.event([f"w{i}"]) for i in range(5)])
        with pytest.raises(TooLarge):
            list(enumerate_members(discrete, limit=4))


class TestAtomMeasure:
    """Tests for exact atom-weight measures."""

    def test_measure_and_total(self, coin_measures, coin_events):
        """Event mass is the sum of its atom weights."""
        p1 = coin_measures["P1"]
        assert p1.measure(coin_events["A"]) == F(1, 4)
        assert p1.measure(coin_events["B"]) == F(3, 4)
        assert p1.is_probability()

    def test_rejects_negative_weights(self, coin_space):
        """Atom measures are nonnegative."""
        with pytest.raises(NotAProbability):
            AtomMeasure(coin_space, (F(1), F(-1), F(0), F(1)))

    def test_normalized(self, coin_space):
        """Normalization divides by the total; the zero measure cannot be normalized."""
        q = AtomMeasure(coin_space, (F(1), F(1), F(2), F(0)))
        assert q.normalized().weights == (F(1, 4), F(1, 4), F(1, 2), F(0))
        assert q.support().labels() == ["HH", "HT", "TH"]
        with pytest.raises(ZeroMeasure):
            AtomMeasure(coin_space, (F(0),) * 4).normalized()

    def test_mixture_of_coin_measures(self, coin_measures):
        """P3 = P1/2 + P2/2 has weights 3/16, 5/16, 5/16, 3/16."""
        assert coin_measures["P3"].weights == (F(3, 16), F(5, 16), F(5, 16), F(3, 16))

    def test_signed_mixture(self, coin_measures):
        """Mixtures may produce negative weights; the caller decides what they are."""
        _, weights = mixture([(1, coin_measures["P1"]), (-1, coin_measures["P2"])])
        assert weights == (F(0), F(-1, 2), F(1, 2), F(0))
