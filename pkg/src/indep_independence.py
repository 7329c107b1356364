"""
Logical, sigma-logical and probabilistic independence of finite families of
sub-sigma-algebras.

The fast logical check uses the block-tuple criterion: a family of nontrivial
partition algebras is logically independent iff every tuple made of one block
per algebra has a nonempty intersection. Every nontrivial member of a partition
algebra contains at least one block, so "all block tuples meet" implies "all
nontrivial choices meet"; conversely every block of a nontrivial algebra is
itself a nontrivial member. The brute-force oracle below transcribes the
definition literally and the test-suite holds the two equal.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Optional, Sequence

from indep_space import AtomMeasure, EventSet, SigmaAlgebra, enumerate_members
from utils.constants import BRUTEFORCE_BUDGET, ENUMERATION_LIMIT
from utils.errors import (
    IndepError,
    InvariantViolation,
    MeasureMismatch,
    NotAProbability,
    SpaceMismatch,
    TooLarge,
    TrivialAlgebra,
)

logger = logging.getLogger(__name__)


class FewerThanTwo(IndepError):
    pass


@dataclass(frozen=True)
class IndependenceVerdict:
    independent: bool
    # (algebra index, event) pairs; present iff not independent
    witness: Optional[tuple] = None
    # exact mismatch for probabilistic failures: P(intersection) vs product of P
    joint: Optional[Fraction] = None
    product: Optional[Fraction] = None

    def witness_intersection(self) -> Optional[EventSet]:
        if self.witness is None:
            return None
        events = [e for _, e in self.witness]
        result = events[0]
        for e in events[1:]:
            result = result & e
        return result


def _validate_family(algebras: Sequence[SigmaAlgebra]) -> None:
    if len(algebras) < 2:
        raise FewerThanTwo(f"independence needs at least two algebras, got {len(algebras)}")
    space = algebras[0].space
    for i, alg in enumerate(algebras):
        if alg.space != space:
            raise SpaceMismatch(f"algebra {i} lives on a different space")
        if not alg.is_nontrivial():
            raise TrivialAlgebra(f"algebra {i} is trivial ({{∅, Ω}})")


def _first_empty_block_tuple(algebras: Sequence[SigmaAlgebra]) -> Optional[tuple]:
    """
    Depth-first walk over block tuples in lexicographic order, pruning on an
    empty partial intersection. The first prune point completed with block 0 in
    the remaining positions is the lexicographically first violating tuple.
    """
    k = len(algebras)
    choice = [0] * k

    def walk(depth: int, acc: int) -> bool:
        if depth == k:
            return False
        for j, block in enumerate(algebras[depth].blocks):
            choice[depth] = j
            meet = acc & block.members
            if not meet:
                for rest in range(depth + 1, k):
                    choice[rest] = 0
                return True
            if walk(depth + 1, meet):
                return True
        return False

    if walk(0, algebras[0].space.full_mask):
        return tuple(choice)
    return None


def check_logical_independence(algebras: Sequence[SigmaAlgebra]) -> IndependenceVerdict:
    _validate_family(algebras)
    violating = _first_empty_block_tuple(algebras)
    if violating is None:
        return IndependenceVerdict(independent=True)
    witness = tuple((i, algebras[i].blocks[j]) for i, j in enumerate(violating))
    logger.debug(f"Block tuple {violating} has empty intersection")
    return IndependenceVerdict(independent=False, witness=witness)


def check_logical_independence_bruteforce(
    algebras: Sequence[SigmaAlgebra],
    budget: int = BRUTEFORCE_BUDGET,
    limit: int = ENUMERATION_LIMIT,
) -> IndependenceVerdict:
    """Every choice of one nontrivial member per algebra must have a nonempty intersection."""
    _validate_family(algebras)
    total = 1
    for alg in algebras:
        total *= 2 ** len(alg.blocks) - 2
    if total > budget:
        raise TooLarge(f"{total} nontrivial choices exceed the brute-force budget of {budget}")

    nontrivial = [[e for e in enumerate_members(alg, limit) if e.is_nontrivial()] for alg in algebras]
    for chosen in product(*nontrivial):
        mask = algebras[0].space.full_mask
        for e in chosen:
            mask &= e.members
        if not mask:
            return IndependenceVerdict(independent=False, witness=tuple(enumerate(chosen)))
    return IndependenceVerdict(independent=True)


def check_sigma_logical_independence(algebras: Sequence[SigmaAlgebra]) -> IndependenceVerdict:
    # A finite family has only finite countable subsets, so the countable
    # intersection condition adds nothing beyond logical independence.
    return check_logical_independence(algebras)


def _prob_fn(measure, algebras: Sequence[SigmaAlgebra]):
    """Returns event -> Fraction for an AtomMeasure or an ExtensionMeasure-like object."""
    space = algebras[0].space
    for i, alg in enumerate(algebras):
        if alg.space != space:
            raise SpaceMismatch(f"algebra {i} lives on a different space")

    if isinstance(measure, AtomMeasure):
        if measure.space != space:
            raise MeasureMismatch("measure and algebras live on different spaces")
        if not measure.is_probability():
            raise NotAProbability(f"total mass is {measure.total()}, not 1")
        return measure.measure

    domain = getattr(measure, "join_algebra", None)
    if domain is None:
        raise MeasureMismatch(f"unsupported measure type {type(measure).__name__}")
    if domain.space != space:
        raise MeasureMismatch("measure and algebras live on different spaces")
    for i, alg in enumerate(algebras):
        if not all(domain.contains(b) for b in alg.blocks):
            raise MeasureMismatch(f"algebra {i} is not refined by the measure's domain")
    if measure.total() != 1:
        raise NotAProbability(f"total mass is {measure.total()}, not 1")
    return measure.measure


def check_probabilistic_independence(algebras: Sequence[SigmaAlgebra], measure) -> IndependenceVerdict:
    """
    Product rule over every subfamily (size >= 2, smallest first, then
    lexicographic) and every block tuple of that subfamily. Block tuples
    suffice: blocks plus the empty set form a pi-system generating each algebra.
    """
    if not algebras:
        return IndependenceVerdict(independent=True)
    prob = _prob_fn(measure, algebras)
    block_probs = [[prob(b) for b in alg.blocks] for alg in algebras]

    for size in range(2, len(algebras) + 1):
        for subset in combinations(range(len(algebras)), size):
            ranges = [range(len(algebras[i].blocks)) for i in subset]
            for tup in product(*ranges):
                mask = algebras[0].space.full_mask
                expected = Fraction(1)
                for i, j in zip(subset, tup):
                    mask &= algebras[i].blocks[j].members
                    expected *= block_probs[i][j]
                joint = prob(EventSet(algebras[0].space, mask))
                if joint != expected:
                    witness = tuple((i, algebras[i].blocks[j]) for i, j in zip(subset, tup))
                    return IndependenceVerdict(
                        independent=False, witness=witness, joint=joint, product=expected
                    )
    return IndependenceVerdict(independent=True)


def has_positive_blocks(algebras: Sequence[SigmaAlgebra], measure) -> bool:
    """Every nontrivial member contains a block, so positive blocks mean positive choices."""
    prob = _prob_fn(measure, algebras)
    return all(prob(b) > 0 for alg in algebras for b in alg.blocks)


def certify_by_positive_measure(algebras: Sequence[SigmaAlgebra], measure) -> bool:
    """
    True iff the measure makes the family independent with every chosen
    nontrivial set of positive probability; that certifies logical independence,
    because a positive product forces a nonempty intersection.
    """
    certified = has_positive_blocks(algebras, measure) and check_probabilistic_independence(
        algebras, measure
    ).independent
    if certified and len(algebras) >= 2:
        logical = check_logical_independence(algebras)
        if not logical.independent:
            raise InvariantViolation(
                "positive independent measure exists but the block-tuple criterion failed"
            )
    return certified
