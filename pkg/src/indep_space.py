"""
Finite measurable spaces, event sets and sigma-algebras stored as partitions.

An EventSet is a bitmask over the atoms of its FiniteSpace (bit i <=> atom i).
A SigmaAlgebra is kept only as its blocks (atoms of the algebra) in canonical
order, sorted by least atom index; its members are exactly the unions of blocks.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from utils.constants import ENUMERATION_LIMIT, MAX_ATOMS
from utils.errors import IndepError, NotAProbability, SpaceMismatch, TooLarge, ZeroMeasure

logger = logging.getLogger(__name__)


class DuplicateLabel(IndepError):
    pass


class EmptySpace(IndepError):
    pass


class TooManyAtoms(IndepError):
    pass


class UnknownAtom(IndepError):
    pass


def _least_atom(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


@dataclass(frozen=True)
class FiniteSpace:
    atom_names: tuple

    @property
    def atom_count(self) -> int:
        return len(self.atom_names)

    @property
    def full_mask(self) -> int:
        return (1 << self.atom_count) - 1

    def index(self, label: str) -> int:
        try:
            return self.atom_names.index(label)
        except ValueError:
            raise UnknownAtom(f"'{label}' is not an atom of this space") from None

    def event(self, labels: Iterable[str]) -> "EventSet":
        mask = 0
        for label in labels:
            mask |= 1 << self.index(label)
        return EventSet(self, mask)

    def event_from_indices(self, indices: Iterable[int]) -> "EventSet":
        mask = 0
        for i in indices:
            if not 0 <= i < self.atom_count:
                raise UnknownAtom(f"atom index {i} outside 0..{self.atom_count - 1}")
            mask |= 1 << i
        return EventSet(self, mask)

    @property
    def empty(self) -> "EventSet":
        return EventSet(self, 0)

    @property
    def omega(self) -> "EventSet":
        return EventSet(self, self.full_mask)


@dataclass(frozen=True)
class EventSet:
    space: FiniteSpace
    members: int

    def _check(self, other: "EventSet") -> None:
        if other.space != self.space:
            raise SpaceMismatch("events live on different spaces")

    def __and__(self, other: "EventSet") -> "EventSet":
        self._check(other)
        return EventSet(self.space, self.members & other.members)

    def __or__(self, other: "EventSet") -> "EventSet":
        self._check(other)
        return EventSet(self.space, self.members | other.members)

    def __sub__(self, other: "EventSet") -> "EventSet":
        self._check(other)
        return EventSet(self.space, self.members & ~other.members)

    def complement(self) -> "EventSet":
        return EventSet(self.space, self.space.full_mask & ~self.members)

    def issubset(self, other: "EventSet") -> bool:
        self._check(other)
        return self.members & ~other.members == 0

    def is_empty(self) -> bool:
        return self.members == 0

    def is_omega(self) -> bool:
        return self.members == self.space.full_mask

    def is_nontrivial(self) -> bool:
        return not self.is_empty() and not self.is_omega()

    def __len__(self) -> int:
        return self.members.bit_count()

    def __iter__(self) -> Iterator[int]:
        mask = self.members
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __contains__(self, atom: int) -> bool:
        return bool(self.members >> atom & 1)

    def least_atom(self) -> int:
        return _least_atom(self.members)

    def labels(self) -> list:
        return [self.space.atom_names[i] for i in self]

    def __repr__(self) -> str:
        return "{" + ",".join(self.labels()) + "}"


@dataclass(frozen=True)
class SigmaAlgebra:
    space: FiniteSpace
    blocks: tuple

    def is_nontrivial(self) -> bool:
        return len(self.blocks) >= 2

    def contains(self, event: EventSet) -> bool:
        """Member test: every block lies wholly inside or wholly outside the event."""
        if event.space != self.space:
            raise SpaceMismatch("event and algebra live on different spaces")
        for block in self.blocks:
            hit = block.members & event.members
            if hit and hit != block.members:
                return False
        return True

    def saturation(self, event: EventSet) -> EventSet:
        """Smallest member of the algebra containing event."""
        if event.space != self.space:
            raise SpaceMismatch("event and algebra live on different spaces")
        mask = 0
        for block in self.blocks:
            if block.members & event.members:
                mask |= block.members
        return EventSet(self.space, mask)

    def block_index_of(self, atom: int) -> int:
        for i, block in enumerate(self.blocks):
            if atom in block:
                return i
        raise UnknownAtom(f"atom index {atom} is not covered by the algebra")

    def blocks_inside(self, event: EventSet) -> list:
        return [i for i, b in enumerate(self.blocks) if b.members & ~event.members == 0]


def _canonical(space: FiniteSpace, masks: Iterable[int]) -> SigmaAlgebra:
    ordered = sorted((m for m in masks if m), key=_least_atom)
    return SigmaAlgebra(space, tuple(EventSet(space, m) for m in ordered))


def make_space(atom_names: Sequence[str], max_atoms: Optional[int] = MAX_ATOMS) -> FiniteSpace:
    """
    Builds a FiniteSpace; atom indices follow the listed order.
    max_atoms=None is the wide profile.
    """
    labels = tuple(atom_names)
    if not labels:
        raise EmptySpace("a space needs at least one atom")
    seen = set()
    for label in labels:
        if label in seen:
            raise DuplicateLabel(f"atom label '{label}' appears more than once")
        seen.add(label)
    if max_atoms is not None and len(labels) > max_atoms:
        raise TooManyAtoms(
            f"{len(labels)} atoms exceed the default profile limit of {max_atoms}; "
            "use the wide profile"
        )
    return FiniteSpace(labels)


def _same_space(space: FiniteSpace, items: Iterable, what: str) -> None:
    for item in items:
        if item.space != space:
            raise SpaceMismatch(f"{what} does not live on the given space")


def generate_sigma_algebra(space: FiniteSpace, generators: Sequence[EventSet]) -> SigmaAlgebra:
    _same_space(space, generators, "generator")
    cells = [space.full_mask]
    for g in generators:
        refined = []
        for cell in cells:
            inside, outside = cell & g.members, cell & ~g.members
            if inside:
                refined.append(inside)
            if outside:
                refined.append(outside)
        cells = refined
    return _canonical(space, cells)


def join(algebras: Sequence[SigmaAlgebra]) -> SigmaAlgebra:
    if not algebras:
        raise ValueError("join needs at least one algebra")
    space = algebras[0].space
    _same_space(space, algebras, "algebra")
    cells = [b.members for b in algebras[0].blocks]
    for alg in algebras[1:]:
        cells = [c & b.members for c in cells for b in alg.blocks if c & b.members]
    return _canonical(space, cells)


def enumerate_members(alg: SigmaAlgebra, limit: int = ENUMERATION_LIMIT) -> Iterator[EventSet]:
    """Yields all 2^#blocks unions of blocks, in binary-counter order over the blocks."""
    count = len(alg.blocks)
    if count > limit:
        raise TooLarge(f"{count} blocks exceed the enumeration limit of {limit}")
    logger.debug(f"Enumerating {2**count} members of a {count}-block algebra")
    masks = [b.members for b in alg.blocks]
    for selector in range(1 << count):
        mask = 0
        for i, m in enumerate(masks):
            if selector >> i & 1:
                mask |= m
        yield EventSet(alg.space, mask)


@dataclass(frozen=True)
class AtomMeasure:
    """A nonnegative finite measure given by exact weights on atoms."""

    space: FiniteSpace
    weights: tuple

    def __post_init__(self):
        if len(self.weights) != self.space.atom_count:
            raise SpaceMismatch(
                f"{len(self.weights)} weights for a space of {self.space.atom_count} atoms"
            )
        if any(w < 0 for w in self.weights):
            raise NotAProbability("atom measures must be nonnegative")

    @classmethod
    def from_labels(cls, space: FiniteSpace, weights: dict) -> "AtomMeasure":
        values = [Fraction(0)] * space.atom_count
        for label, w in weights.items():
            values[space.index(label)] = Fraction(w)
        return cls(space, tuple(values))

    def measure(self, event: EventSet) -> Fraction:
        if event.space != self.space:
            raise SpaceMismatch("event and measure live on different spaces")
        return sum((self.weights[i] for i in event), Fraction(0))

    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def is_probability(self) -> bool:
        return self.total() == 1

    def normalized(self) -> "AtomMeasure":
        total = self.total()
        if total == 0:
            raise ZeroMeasure("cannot normalize the zero measure")
        return AtomMeasure(self.space, tuple(w / total for w in self.weights))

    def support(self) -> EventSet:
        return self.space.event_from_indices(i for i, w in enumerate(self.weights) if w)


def mixture(components: Sequence[tuple]) -> tuple:
    """
    Exact linear combination sum(c * Q) of atom-weight vectors.
    components is a sequence of (coefficient, AtomMeasure-or-weights-holder);
    returns (space, weights) so callers decide whether the result is signed.
    """
    if not components:
        raise ValueError("a mixture needs at least one component")
    space = components[0][1].space
    weights = [Fraction(0)] * space.atom_count
    for coefficient, q in components:
        if q.space != space:
            raise SpaceMismatch("mixture components live on different spaces")
        c = Fraction(coefficient)
        for i, w in enumerate(q.weights):
            weights[i] += c * w
    return space, tuple(weights)
