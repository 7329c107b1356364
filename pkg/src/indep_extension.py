"""
Independence-preserving extension of per-factor probabilities to the join.

Given a logically independent family of partition algebras and one probability
per factor, the joint measure puts mass prod_i P_i(B_i) on each cell
B_1 & ... & B_k of the join. Every block tuple is a nonempty cell because the
family is independent, so the join's cells are exactly the block tuples.

All arithmetic is exact (fractions.Fraction). The realized atom set of a
cylinder is the single source of truth for every set-level claim below.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Optional, Sequence

from indep_independence import (
    IndependenceVerdict,
    check_logical_independence,
    check_probabilistic_independence,
)
from indep_space import AtomMeasure, EventSet, SigmaAlgebra
from utils.errors import (
    IndepError,
    InvariantViolation,
    MeasureMismatch,
    NotAProbability,
    SpaceMismatch,
    TrivialAlgebra,
    UnknownAlgebraIndex,
)

logger = logging.getLogger(__name__)


class NotLogicallyIndependent(IndepError):
    def __init__(self, verdict: IndependenceVerdict):
        self.verdict = verdict
        super().__init__(f"family is not logically independent; witness {verdict.witness}")


class NotInAlgebra(IndepError):
    pass


class NotDisjoint(IndepError):
    pass


class UnionNotCylinder(IndepError):
    pass


@dataclass(frozen=True)
class CylinderEvent:
    """
    Intersection of one member per factor algebra, stored as sorted
    (algebra index, EventSet) pairs. An absent index means Omega.
    """

    factors: tuple = ()
    is_empty: bool = False

    @classmethod
    def of(cls, mapping: Dict[int, EventSet]) -> "CylinderEvent":
        return cls(tuple(sorted(mapping.items(), key=lambda item: item[0])))

    def indices(self) -> tuple:
        return tuple(i for i, _ in self.factors)

    def get(self, index: int) -> Optional[EventSet]:
        for i, e in self.factors:
            if i == index:
                return e
        return None

    def __repr__(self) -> str:
        if self.is_empty:
            return "Empty"
        return "{" + ", ".join(f"{i}: {e!r}" for i, e in self.factors) + "}"


EMPTY = CylinderEvent(is_empty=True)


@dataclass(frozen=True)
class IndependentFamily:
    algebras: tuple

    @property
    def space(self):
        return self.algebras[0].space

    def _check_entry(self, index: int, event: EventSet) -> None:
        if not 0 <= index < len(self.algebras):
            raise UnknownAlgebraIndex(
                f"algebra index {index} outside 0..{len(self.algebras) - 1}"
            )
        if event.space != self.space:
            raise SpaceMismatch(f"entry for algebra {index} lives on a different space")
        if not self.algebras[index].contains(event):
            raise NotInAlgebra(f"{event!r} is not a member of algebra {index}")

    def cylinder(self, mapping: Dict[int, EventSet]) -> CylinderEvent:
        for i, e in mapping.items():
            self._check_entry(i, e)
        return CylinderEvent.of(mapping)

    def realize(self, c: CylinderEvent) -> EventSet:
        if c.is_empty:
            return self.space.empty
        mask = self.space.full_mask
        for i, e in c.factors:
            self._check_entry(i, e)
            mask &= e.members
        return EventSet(self.space, mask)

    def intersect(self, a: CylinderEvent, b: CylinderEvent) -> CylinderEvent:
        if a.is_empty or b.is_empty:
            return EMPTY
        merged: Dict[int, EventSet] = dict(a.factors)
        for i, e in b.factors:
            merged[i] = merged[i] & e if i in merged else e
        return canonical_form(self, CylinderEvent.of(merged))

    def cylinder_hull(self, event: EventSet) -> CylinderEvent:
        """Intersection of the event's saturations; event is a cylinder iff it equals this."""
        if event.is_empty():
            return EMPTY
        mapping = {i: alg.saturation(event) for i, alg in enumerate(self.algebras)}
        return canonical_form(self, CylinderEvent.of(mapping))

    def is_cylinder(self, event: EventSet) -> bool:
        return self.realize(self.cylinder_hull(event)) == event


def make_family(algebras: Sequence[SigmaAlgebra]) -> IndependentFamily:
    if not algebras:
        raise IndepError("a family needs at least one algebra")
    if len(algebras) == 1:
        if not algebras[0].is_nontrivial():
            raise TrivialAlgebra("algebra 0 is trivial ({∅, Ω})")
        return IndependentFamily(tuple(algebras))
    verdict = check_logical_independence(algebras)
    if not verdict.independent:
        raise NotLogicallyIndependent(verdict)
    return IndependentFamily(tuple(algebras))


def canonical_form(family: IndependentFamily, c: CylinderEvent) -> CylinderEvent:
    """
    Drops Omega entries and collapses to EMPTY when an entry is empty or the
    realized set is. Over an independent family, nonempty cylinders with equal
    realized sets get identical canonical forms.
    """
    if c.is_empty:
        return EMPTY
    merged: Dict[int, EventSet] = {}
    for i, e in c.factors:
        family._check_entry(i, e)
        merged[i] = merged[i] & e if i in merged else e
    kept = {}
    for i, e in merged.items():
        if e.is_empty():
            return EMPTY
        if not e.is_omega():
            kept[i] = e
    result = CylinderEvent.of(kept)
    if family.realize(result).is_empty():
        return EMPTY
    return result


def semiring_difference(family: IndependentFamily, a: CylinderEvent, b: CylinderEvent) -> list:
    """
    a minus b as pairwise disjoint cylinders, telescoping over b's entries:
    piece l is a & B_1 & ... & B_(l-1) & complement(B_l).
    """
    a = canonical_form(family, a)
    b = canonical_form(family, b)
    if a.is_empty:
        return []
    if b.is_empty:
        return [a]

    pieces = []
    prefix: Dict[int, EventSet] = {}
    for j, bj in b.factors:
        piece = dict(prefix)
        piece[j] = bj.complement()
        candidate = family.intersect(a, CylinderEvent.of(piece))
        if not candidate.is_empty:
            pieces.append(candidate)
        prefix[j] = bj
    return pieces


@dataclass(frozen=True)
class FactorMeasure:
    algebra: SigmaAlgebra
    block_prob: tuple

    def __post_init__(self):
        if len(self.block_prob) != len(self.algebra.blocks):
            raise MeasureMismatch(
                f"{len(self.block_prob)} probabilities for {len(self.algebra.blocks)} blocks"
            )
        if any(p < 0 for p in self.block_prob):
            raise NotAProbability("block probabilities must be nonnegative")
        total = sum(self.block_prob, Fraction(0))
        if total != 1:
            raise NotAProbability(f"block probabilities sum to {total}, not 1")

    @classmethod
    def from_blocks(cls, algebra: SigmaAlgebra, weights: Dict[EventSet, Fraction]) -> "FactorMeasure":
        probs = [Fraction(0)] * len(algebra.blocks)
        for event, w in weights.items():
            if event not in algebra.blocks:
                raise MeasureMismatch(f"{event!r} is not a block of the algebra")
            probs[algebra.blocks.index(event)] = Fraction(w)
        return cls(algebra, tuple(probs))

    @classmethod
    def from_atom_measure(cls, algebra: SigmaAlgebra, q: AtomMeasure) -> "FactorMeasure":
        """Restriction of q to the algebra."""
        if q.space != algebra.space:
            raise MeasureMismatch("measure and algebra live on different spaces")
        return cls(algebra, tuple(q.measure(b) for b in algebra.blocks))

    def prob(self, event: EventSet) -> Fraction:
        if not self.algebra.contains(event):
            raise MeasureMismatch(f"{event!r} is not a member of the factor algebra")
        return sum(
            (self.block_prob[i] for i in self.algebra.blocks_inside(event)), Fraction(0)
        )


def marginals_of(q: AtomMeasure, algebras: Sequence[SigmaAlgebra]) -> list:
    return [FactorMeasure.from_atom_measure(alg, q) for alg in algebras]


@dataclass(frozen=True)
class ExtensionMeasure:
    join_algebra: SigmaAlgebra
    cell_prob: tuple
    provenance: tuple
    factors: tuple = field(repr=False)
    family: IndependentFamily = field(repr=False)

    def __post_init__(self):
        if any(p < 0 for p in self.cell_prob):
            raise InvariantViolation("negative cell probability")
        total = sum(self.cell_prob, Fraction(0))
        if total != 1:
            raise InvariantViolation(f"cell probabilities sum to {total}, not 1")

    def total(self) -> Fraction:
        return sum(self.cell_prob, Fraction(0))

    def measure(self, event: EventSet) -> Fraction:
        if not self.join_algebra.contains(event):
            raise MeasureMismatch(f"{event!r} is not a member of the join algebra")
        return sum(
            (self.cell_prob[i] for i in self.join_algebra.blocks_inside(event)), Fraction(0)
        )

    def cell_table(self) -> list:
        return list(zip(self.join_algebra.blocks, self.cell_prob))

    def to_atom_measure(self) -> AtomMeasure:
        """Each cell's mass sits on the cell's least atom."""
        space = self.join_algebra.space
        weights = [Fraction(0)] * space.atom_count
        for cell, p in zip(self.join_algebra.blocks, self.cell_prob):
            weights[cell.least_atom()] = p
        return AtomMeasure(space, tuple(weights))


def extend(factors: Sequence[FactorMeasure]) -> ExtensionMeasure:
    """
    The unique probability on the join with the given factor marginals under
    which the factor family is probabilistically independent.
    """
    if not factors:
        raise IndepError("extend needs at least one factor measure")
    algebras = [f.algebra for f in factors]
    space = algebras[0].space
    for i, alg in enumerate(algebras):
        if alg.space != space:
            raise SpaceMismatch(f"factor {i} lives on a different space")
    family = make_family(algebras)

    cells = []
    for tup in product(*[range(len(alg.blocks)) for alg in algebras]):
        mask = space.full_mask
        p = Fraction(1)
        for i, j in enumerate(tup):
            mask &= algebras[i].blocks[j].members
            p *= factors[i].block_prob[j]
        if not mask:
            raise InvariantViolation(f"block tuple {tup} is empty over an independent family")
        cells.append((EventSet(space, mask), p))
    cells.sort(key=lambda cell: cell[0].least_atom())

    logger.debug(f"Extended {len(factors)} factors onto {len(cells)} join cells")
    return ExtensionMeasure(
        join_algebra=SigmaAlgebra(space, tuple(c[0] for c in cells)),
        cell_prob=tuple(c[1] for c in cells),
        provenance=tuple(range(len(factors))),
        factors=tuple(factors),
        family=family,
    )


def positive_independent_measure(algebras: Sequence[SigmaAlgebra]) -> ExtensionMeasure:
    """
    A measure under which a logically independent family is probabilistically
    independent and every block has positive probability: the extension of the
    uniform distribution over each algebra's blocks.
    """
    return extend(
        [
            FactorMeasure(alg, tuple(Fraction(1, len(alg.blocks)) for _ in alg.blocks))
            for alg in algebras
        ]
    )


def measure_of_cylinder(P: ExtensionMeasure, c: CylinderEvent) -> Fraction:
    canon = canonical_form(P.family, c)
    if canon.is_empty:
        return Fraction(0)
    by_product = Fraction(1)
    for i, e in canon.factors:
        by_product *= P.factors[i].prob(e)
    by_cells = P.measure(P.family.realize(canon))
    if by_product != by_cells:
        raise InvariantViolation(
            f"product formula {by_product} disagrees with cell sum {by_cells} for {canon!r}"
        )
    return by_product


@dataclass(frozen=True)
class AdditivityReport:
    holds: bool
    parts_total: Fraction
    union_total: Fraction
    chain_total: Fraction
    d_chain_count: int
    p_chain_count: int
    cells_per_factor: tuple
    chains_in_exactly_one_part: bool


def _realized_parts(family: IndependentFamily, parts: Sequence[CylinderEvent]) -> list:
    realized = []
    for c in parts:
        canon = canonical_form(family, c)
        if not canon.is_empty:
            realized.append((canon, family.realize(canon)))
    for x in range(len(realized)):
        for y in range(x + 1, len(realized)):
            if realized[x][1].members & realized[y][1].members:
                raise NotDisjoint(f"parts {realized[x][0]!r} and {realized[y][0]!r} overlap")
    return realized


def _maximal_disjoint_decomposition(pieces: Sequence[EventSet]) -> list:
    """Nonempty sets of the form (meet of pieces in J) minus (union of the rest)."""
    union = 0
    for e in pieces:
        union |= e.members
    cells = [union] if union else []
    for e in pieces:
        refined = []
        for cell in cells:
            for part in (cell & e.members, cell & ~e.members):
                if part:
                    refined.append(part)
        cells = refined
    space = pieces[0].space
    return sorted((EventSet(space, m) for m in cells), key=lambda e: e.least_atom())


def verify_finite_additivity(P: ExtensionMeasure, parts: Sequence[CylinderEvent]) -> AdditivityReport:
    """
    Disjoint cylinders whose union is a cylinder: checks
    sum P(parts) == P(union) == sum over P-chains, and that every D-chain lies
    in exactly one part.
    """
    family = P.family
    realized = _realized_parts(family, parts)
    union_mask = 0
    for _, e in realized:
        union_mask |= e.members
    union = EventSet(family.space, union_mask)
    hull = family.cylinder_hull(union)
    if family.realize(hull) != union:
        raise UnionNotCylinder(f"the union {union!r} of the parts is not a cylinder")

    parts_total = sum((measure_of_cylinder(P, c) for c, _ in realized), Fraction(0))
    union_total = measure_of_cylinder(P, hull)
    if not realized:
        return AdditivityReport(True, parts_total, union_total, Fraction(0), 0, 0, (), True)

    indices = sorted({i for c, _ in realized for i in c.indices()})
    omega = family.space.omega
    decompositions = []
    for h in indices:
        pieces = [c.get(h) if c.get(h) is not None else omega for c, _ in realized]
        decompositions.append(_maximal_disjoint_decomposition(pieces))

    chain_total = Fraction(0)
    chain_count = 0
    exactly_one = True
    for chain in product(*decompositions):
        chain_count += 1
        p_chain = Fraction(1)
        mask = family.space.full_mask
        for h, d in zip(indices, chain):
            p_chain *= P.factors[h].prob(d)
            mask &= d.members
        chain_total += p_chain
        holders = sum(1 for _, e in realized if mask & ~e.members == 0)
        if not mask or holders != 1:
            exactly_one = False

    holds = exactly_one and parts_total == union_total == chain_total
    if not holds:
        logger.error(
            f"❌ Finite additivity failed: parts {parts_total}, union {union_total}, chains {chain_total}"
        )
    return AdditivityReport(
        holds=holds,
        parts_total=parts_total,
        union_total=union_total,
        chain_total=chain_total,
        d_chain_count=chain_count,
        p_chain_count=chain_count,
        cells_per_factor=tuple(len(d) for d in decompositions),
        chains_in_exactly_one_part=exactly_one,
    )


@dataclass(frozen=True)
class UnionReport:
    status: str
    union: EventSet
    cylinder: Optional[CylinderEvent]
    componentwise: Optional[CylinderEvent]

    @property
    def representable(self) -> bool:
        return self.status == "Representable"


def verify_union_representation(family: IndependentFamily, parts: Sequence[CylinderEvent]) -> UnionReport:
    """
    When a union of cylinders is itself a cylinder, it equals the cylinder of
    component-wise unions (absent entries count as Omega).
    """
    canon = [canonical_form(family, c) for c in parts]
    canon = [c for c in canon if not c.is_empty]
    union_mask = 0
    for c in canon:
        union_mask |= family.realize(c).members
    union = EventSet(family.space, union_mask)

    hull = family.cylinder_hull(union)
    if family.realize(hull) != union:
        return UnionReport("NotACylinder", union, None, None)
    if not canon:
        return UnionReport("Representable", union, EMPTY, EMPTY)

    indices = sorted({i for c in canon for i in c.indices()})
    componentwise = {}
    for h in indices:
        mask = 0
        for c in canon:
            entry = c.get(h)
            mask |= entry.members if entry is not None else family.space.full_mask
        componentwise[h] = EventSet(family.space, mask)
    componentwise = canonical_form(family, CylinderEvent.of(componentwise))

    if componentwise != hull or family.realize(componentwise) != union:
        raise InvariantViolation(
            f"union is the cylinder {hull!r} but component-wise unions give {componentwise!r}"
        )
    return UnionReport("Representable", union, hull, componentwise)


@dataclass(frozen=True)
class UniquenessReport:
    holds: bool
    marginals_match: bool
    independent: bool
    equal: Optional[bool]
    witness: Optional[IndependenceVerdict]


def verify_uniqueness(P: ExtensionMeasure, Q: AtomMeasure) -> UniquenessReport:
    """
    Q agrees with P iff it has P's factor marginals and keeps the family
    independent; when both hold, Q must equal P cell by cell.
    """
    if Q.space != P.join_algebra.space:
        raise MeasureMismatch("Q lives on a different space than the extension")
    if not Q.is_probability():
        raise NotAProbability(f"Q has total mass {Q.total()}, not 1")

    marginals_match = all(
        Q.measure(block) == f.block_prob[j]
        for f in P.factors
        for j, block in enumerate(f.algebra.blocks)
    )
    verdict = check_probabilistic_independence(list(P.family.algebras), Q)
    if not (marginals_match and verdict.independent):
        return UniquenessReport(
            holds=False,
            marginals_match=marginals_match,
            independent=verdict.independent,
            equal=None,
            witness=None if verdict.independent else verdict,
        )

    equal = all(Q.measure(cell) == p for cell, p in P.cell_table())
    if not equal:
        raise InvariantViolation("Q matches marginals and independence but differs from P")
    return UniquenessReport(True, True, True, True, None)


def perturb_cell(P: ExtensionMeasure, from_cell: int, to_cell: int, delta: Fraction) -> AtomMeasure:
    """Moves delta of mass between two join cells; the total stays 1."""
    if from_cell == to_cell:
        raise ValueError("perturbation needs two distinct cells")
    if not 0 < delta <= P.cell_prob[from_cell]:
        raise ValueError(f"delta must lie in (0, {P.cell_prob[from_cell]}]")
    base = P.to_atom_measure()
    weights = list(base.weights)
    weights[P.join_algebra.blocks[from_cell].least_atom()] -= delta
    weights[P.join_algebra.blocks[to_cell].least_atom()] += delta
    return AtomMeasure(base.space, tuple(weights))
