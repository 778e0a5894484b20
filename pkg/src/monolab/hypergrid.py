"""Hypercube and hypergrid domains, bit arithmetic and the grid-to-cube map.

Bit positions are 1-based and position 1 is the least significant bit, so a
point ``x`` of ``{0,1}^m`` is identified with the integer ``val(x)`` whose
binary digits are its bits.  Grid points are plain tuples of ints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

from .errors import DomainError

GridPoint = Tuple[int, ...]

#: Largest cube dimension for which explicit tables are built.
MAX_TABLE_BITS = 24


@dataclass(frozen=True, order=True)
class BitPoint:
    """A point of ``{0,1}^m`` packed into an int (bit ``i`` is ``(value >> (i-1)) & 1``)."""

    value: int
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"m must be positive, got {self.m}")
        if not 0 <= self.value < (1 << self.m):
            raise DomainError(f"value {self.value} does not fit in {self.m} bits")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "BitPoint":
        value = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise DomainError(f"bit {i + 1} is {b!r}, expected 0 or 1")
            value |= b << i
        return cls(value, len(bits))

    @classmethod
    def parse(cls, text: str) -> "BitPoint":
        """Parse the little-endian bitstring ``"x1x2...xm"``."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise DomainError(f"not a bitstring: {text!r}")
        return cls.from_bits([int(c) for c in text])

    @property
    def bits(self) -> Tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.m))

    def bit(self, i: int) -> int:
        if not 1 <= i <= self.m:
            raise DomainError(f"bit index {i} outside [1, {self.m}]")
        return (self.value >> (i - 1)) & 1

    def flip(self, i: int) -> "BitPoint":
        if not 1 <= i <= self.m:
            raise DomainError(f"bit index {i} outside [1, {self.m}]")
        return BitPoint(self.value ^ (1 << (i - 1)), self.m)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class DomainParams:
    """Side length ``n`` (a power of two) and dimension ``d`` of ``[n]^d``."""

    n: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"d must be positive, got {self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise DomainError(f"n must be a power of 2 and at least 2, got {self.n}")

    @property
    def ell(self) -> int:
        return self.n.bit_length() - 1

    @property
    def m(self) -> int:
        return self.d * self.ell


def val(x: BitPoint) -> int:
    return x.value


def phi(y: Sequence[int], p: DomainParams) -> BitPoint:
    """Concatenate the ``ell``-bit representations of the coordinates of ``y``.

    Coordinate 1 fills bit positions ``1..ell``, coordinate 2 fills
    ``ell+1..2*ell`` and so on.
    """
    if len(y) != p.d:
        raise DomainError(f"grid point {tuple(y)} has {len(y)} coordinates, expected {p.d}")
    value = 0
    for i, c in enumerate(y):
        if not 0 <= c < p.n:
            raise DomainError(f"coordinate {c} outside [0, {p.n})")
        value |= c << (i * p.ell)
    return BitPoint(value, p.m)


def phi_inverse(x: BitPoint, p: DomainParams) -> GridPoint:
    if x.m != p.m:
        raise DomainError(f"point has {x.m} bits, expected {p.m}")
    mask = p.n - 1
    return tuple((x.value >> (i * p.ell)) & mask for i in range(p.d))


def grid_leq(u: Sequence[int], v: Sequence[int]) -> bool:
    if len(u) != len(v):
        raise DomainError(f"dimension mismatch: {len(u)} vs {len(v)}")
    return all(a <= b for a, b in zip(u, v))


def cube_leq(x: BitPoint, y: BitPoint) -> bool:
    if x.m != y.m:
        raise DomainError(f"length mismatch: {x.m} vs {y.m}")
    return x.value & ~y.value == 0


def format_grid_point(y: Sequence[int]) -> str:
    return ",".join(str(c) for c in y)


def parse_grid_point(text: str) -> GridPoint:
    try:
        return tuple(int(c) for c in text.strip().split(","))
    except ValueError as exc:
        raise DomainError(f"not a grid point: {text!r}") from exc


class Hypercube:
    """The poset ``{0,1}^m`` with points as :class:`BitPoint`."""

    def __init__(self, m: int):
        if m < 1:
            raise DomainError(f"m must be positive, got {m}")
        self.m = m

    def __eq__(self, other):
        return isinstance(other, Hypercube) and other.m == self.m

    def __hash__(self):
        return hash(("cube", self.m))

    def __repr__(self):
        return f"Hypercube(m={self.m})"

    @property
    def size(self) -> int:
        return 1 << self.m

    def points(self) -> Iterator[BitPoint]:
        for v in range(self.size):
            yield BitPoint(v, self.m)

    def leq(self, u: BitPoint, v: BitPoint) -> bool:
        return cube_leq(u, v)

    def strict_predecessors(self, v: BitPoint) -> Iterator[BitPoint]:
        # proper submasks of v.value
        s = (v.value - 1) & v.value if v.value else None
        while s is not None:
            yield BitPoint(s, self.m)
            s = (s - 1) & v.value if s else None

    def sort_key(self, u: BitPoint) -> int:
        return u.value

    def contains(self, u) -> bool:
        return isinstance(u, BitPoint) and u.m == self.m

    def format_point(self, u: BitPoint) -> str:
        return str(u)

    def parse_point(self, text: str) -> BitPoint:
        u = BitPoint.parse(text)
        if u.m != self.m:
            raise DomainError(f"point {text!r} has {u.m} bits, expected {self.m}")
        return u


class Hypergrid:
    """The poset ``[n]^d`` with points as int tuples."""

    def __init__(self, params: DomainParams):
        self.params = params

    def __eq__(self, other):
        return isinstance(other, Hypergrid) and other.params == self.params

    def __hash__(self):
        return hash(("grid", self.params))

    def __repr__(self):
        return f"Hypergrid(n={self.params.n}, d={self.params.d})"

    @property
    def size(self) -> int:
        return self.params.n ** self.params.d

    def points(self) -> Iterator[GridPoint]:
        # last coordinate varies slowest, matching increasing val(phi(y))
        for rev in itertools.product(range(self.params.n), repeat=self.params.d):
            yield tuple(reversed(rev))

    def leq(self, u: GridPoint, v: GridPoint) -> bool:
        return grid_leq(u, v)

    def strict_predecessors(self, v: GridPoint) -> Iterator[GridPoint]:
        for u in itertools.product(*(range(c + 1) for c in v)):
            if u != tuple(v):
                yield u

    def sort_key(self, u: GridPoint) -> int:
        return phi(u, self.params).value

    def contains(self, u) -> bool:
        return (
            isinstance(u, tuple)
            and len(u) == self.params.d
            and all(isinstance(c, int) and 0 <= c < self.params.n for c in u)
        )

    def format_point(self, u: GridPoint) -> str:
        return format_grid_point(u)

    def parse_point(self, text: str) -> GridPoint:
        u = parse_grid_point(text)
        if not self.contains(u):
            raise DomainError(f"grid point {text!r} outside [{self.params.n}]^{self.params.d}")
        return u
