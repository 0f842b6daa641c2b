"""Dense edge-set values keyed by EdgeId.

An :class:`EdgeSet` wraps a Python int used as a bitset over a fixed edge
universe.  Bit ``i`` set means edge ``i`` is a member.
"""

from __future__ import annotations

from typing import Iterable, Iterator


def iter_bits(bits: int) -> Iterator[int]:
    """Yield the indices of set bits in ascending order."""
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


class EdgeSet:
    __slots__ = ("bits", "universe")

    def __init__(self, bits: int = 0, universe: int = 0):
        if bits < 0 or bits >> universe:
            raise ValueError(f"bits out of range for universe of size {universe}")
        self.bits = bits
        self.universe = universe

    @classmethod
    def from_ids(cls, ids: Iterable[int], universe: int) -> "EdgeSet":
        bits = 0
        for i in ids:
            if not 0 <= i < universe:
                raise ValueError(f"edge id {i} outside universe 0..{universe - 1}")
            bits |= 1 << i
        return cls(bits, universe)

    @classmethod
    def full(cls, universe: int) -> "EdgeSet":
        return cls((1 << universe) - 1, universe)

    def _check(self, other: "EdgeSet") -> None:
        if not isinstance(other, EdgeSet):
            raise TypeError(f"expected EdgeSet, got {type(other).__name__}")
        if other.universe != self.universe:
            raise ValueError(
                f"edge-set universes differ ({self.universe} vs {other.universe})"
            )

    def __and__(self, other: "EdgeSet") -> "EdgeSet":
        self._check(other)
        return EdgeSet(self.bits & other.bits, self.universe)

    def __or__(self, other: "EdgeSet") -> "EdgeSet":
        self._check(other)
        return EdgeSet(self.bits | other.bits, self.universe)

    def __sub__(self, other: "EdgeSet") -> "EdgeSet":
        self._check(other)
        return EdgeSet(self.bits & ~other.bits, self.universe)

    def __xor__(self, other: "EdgeSet") -> "EdgeSet":
        self._check(other)
        return EdgeSet(self.bits ^ other.bits, self.universe)

    def __le__(self, other: "EdgeSet") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def __lt__(self, other: "EdgeSet") -> bool:
        return self <= other and self.bits != other.bits

    def __ge__(self, other: "EdgeSet") -> bool:
        return other <= self

    def __gt__(self, other: "EdgeSet") -> bool:
        return other < self

    def issubset(self, other: "EdgeSet") -> bool:
        return self <= other

    def isdisjoint(self, other: "EdgeSet") -> bool:
        self._check(other)
        return self.bits & other.bits == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeSet):
            return NotImplemented
        self._check(other)
        return self.bits == other.bits

    def __hash__(self) -> int:
        return hash((self.bits, self.universe))

    def __contains__(self, eid: int) -> bool:
        return 0 <= eid < self.universe and (self.bits >> eid) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.bits)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def add(self, eid: int) -> "EdgeSet":
        return EdgeSet.from_ids([eid], self.universe) | self

    def discard(self, eid: int) -> "EdgeSet":
        return EdgeSet(self.bits & ~(1 << eid), self.universe)

    def ids(self) -> list[int]:
        return list(iter_bits(self.bits))

    def __repr__(self) -> str:
        return f"EdgeSet({self.ids()}, universe={self.universe})"
