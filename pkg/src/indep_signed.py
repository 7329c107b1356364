"""
Signed measures on finite spaces and independence under them.

A family is independent under a signed measure when it is independent under
both parts of the Jordan decomposition, each normalized by its total mass.
A zero part imposes nothing.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from indep_independence import (
    IndependenceVerdict,
    check_probabilistic_independence,
    check_sigma_logical_independence,
)
from indep_space import AtomMeasure, EventSet, FiniteSpace, SigmaAlgebra, mixture
from utils.errors import IndepError, NotAProbability, SpaceMismatch, ZeroMeasure

logger = logging.getLogger(__name__)


class NotSigmaLogicallyIndependent(IndepError):
    def __init__(self, verdict: IndependenceVerdict):
        self.verdict = verdict
        super().__init__(f"family is not sigma-logically independent; witness {verdict.witness}")


@dataclass(frozen=True)
class SignedMeasure:
    space: FiniteSpace
    atom_weight: tuple

    def __post_init__(self):
        if len(self.atom_weight) != self.space.atom_count:
            raise SpaceMismatch(
                f"{len(self.atom_weight)} weights for a space of {self.space.atom_count} atoms"
            )

    @classmethod
    def from_measures(cls, combination: Sequence[tuple]) -> "SignedMeasure":
        """combination is a sequence of (coefficient, AtomMeasure)."""
        return cls(*mixture(combination))

    def measure(self, event: EventSet) -> Fraction:
        if event.space != self.space:
            raise SpaceMismatch("event and measure live on different spaces")
        return sum((self.atom_weight[i] for i in event), Fraction(0))

    def total(self) -> Fraction:
        return sum(self.atom_weight, Fraction(0))

    def total_variation(self) -> Fraction:
        return sum((abs(w) for w in self.atom_weight), Fraction(0))


@dataclass(frozen=True)
class JordanPair:
    positive: AtomMeasure
    negative: AtomMeasure
    hahn_positive_set: EventSet


def jordan_decompose(mu: SignedMeasure) -> JordanPair:
    # zero-weight atoms land in the positive set
    positive = tuple(max(w, Fraction(0)) for w in mu.atom_weight)
    negative = tuple(max(-w, Fraction(0)) for w in mu.atom_weight)
    hahn = mu.space.event_from_indices(i for i, w in enumerate(mu.atom_weight) if w >= 0)
    return JordanPair(
        positive=AtomMeasure(mu.space, positive),
        negative=AtomMeasure(mu.space, negative),
        hahn_positive_set=hahn,
    )


@dataclass(frozen=True)
class SignedVerdict:
    independent: bool
    # None marks a zero (vacuous) part
    positive: Optional[IndependenceVerdict]
    negative: Optional[IndependenceVerdict]


@dataclass(frozen=True)
class UniformVerdict:
    independent: bool
    failing_measure: Optional[int] = None
    witness: Optional[IndependenceVerdict] = None


def _require_sigma_logical(algebras: Sequence[SigmaAlgebra]) -> None:
    verdict = check_sigma_logical_independence(algebras)
    if not verdict.independent:
        raise NotSigmaLogicallyIndependent(verdict)


def check_independence_signed(algebras: Sequence[SigmaAlgebra], mu: SignedMeasure) -> SignedVerdict:
    _require_sigma_logical(algebras)
    pair = jordan_decompose(mu)

    verdicts = []
    for part in (pair.positive, pair.negative):
        if part.total() == 0:
            verdicts.append(None)
        else:
            verdicts.append(check_probabilistic_independence(algebras, part.normalized()))
    if verdicts == [None, None]:
        raise ZeroMeasure("both Jordan parts are zero")

    positive, negative = verdicts
    independent = all(v.independent for v in verdicts if v is not None)
    logger.debug(f"Signed independence: positive={positive}, negative={negative}")
    return SignedVerdict(independent, positive, negative)


def check_uniform_independence(algebras: Sequence[SigmaAlgebra], measures: Sequence) -> UniformVerdict:
    """Independence under every measure of the family; the first failure is reported."""
    _require_sigma_logical(algebras)
    for i, q in enumerate(measures):
        if isinstance(q, AtomMeasure) and not q.is_probability():
            raise NotAProbability(f"measure {i} has total mass {q.total()}, not 1")
        verdict = check_probabilistic_independence(algebras, q)
        if not verdict.independent:
            return UniformVerdict(False, failing_measure=i, witness=verdict)
    return UniformVerdict(True)
