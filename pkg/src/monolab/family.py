"""The hard distribution over functions on ``{0,1}^m``.

The base function is ``2*val``.  For a block ``k`` (an aligned subcube fixed by
the bits above position ``m_prime``) and a coordinate ``j <= m_prime``, the
perturbed function ``g_{j,k}`` lowers the value of every point of block ``k``
with bit ``j`` set by ``2**j + 1``, which turns each pair ``(x, x ^ e_j)``
inside the block into a violation.

Values are signed: ``g_{j,1}`` takes the value -1 at ``val(x) = 2**(j-1)``.
Pass ``offset=NATURAL_OFFSET`` to :func:`evaluate` for non-negative values;
the order of values is unchanged.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, DomainError
from .hypergrid import BitPoint, DomainParams, GridPoint, Hypercube

NATURAL_OFFSET = 2
MAX_CSV_BITS = 16


@dataclass(frozen=True)
class FamilyParams:
    """Cube dimension ``m`` and farness ``epsilon = 2**-a`` with ``1 <= a <= m``."""

    m: int
    epsilon: Fraction

    def __post_init__(self):
        eps = Fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if self.m < 1:
            raise DomainError(f"m must be positive, got {self.m}")
        if eps.numerator != 1 or eps.denominator < 2 or eps.denominator & (eps.denominator - 1):
            raise DomainError(f"epsilon must be 1/2^a with 1 <= a <= m, got {eps}")
        if self.log_inv_epsilon > self.m:
            raise DomainError(
                f"epsilon={eps} too small for m={self.m}: need 2^(1-m) <= epsilon <= 1/2"
            )

    @classmethod
    def from_exponent(cls, m: int, a: int) -> "FamilyParams":
        return cls(m, Fraction(1, 2 ** a))

    @property
    def log_inv_epsilon(self) -> int:
        return self.epsilon.denominator.bit_length() - 1

    @property
    def m_prime(self) -> int:
        return self.m + 1 - self.log_inv_epsilon

    @property
    def block_count(self) -> int:
        return self.epsilon.denominator // 2

    @property
    def block_size(self) -> int:
        return 1 << self.m_prime

    @property
    def perturbed_mass(self) -> Fraction:
        return self.epsilon / self.m_prime


def format_epsilon(eps: Fraction) -> str:
    return f"1/2^{Fraction(eps).denominator.bit_length() - 1}"


_EPS_RE = re.compile(r"^\s*1\s*/\s*(?:2\s*\^\s*(\d+)|(\d+))\s*$")


def parse_epsilon(text: str) -> Fraction:
    """Accept ``"1/2^a"`` or ``"1/q"`` with ``q`` a power of two."""
    match = _EPS_RE.match(text)
    if not match:
        raise DomainError(f"epsilon must look like '1/2^a' or '1/8', got {text!r}")
    if match.group(1) is not None:
        q = 2 ** int(match.group(1))
    else:
        q = int(match.group(2))
    if q < 2 or q & (q - 1):
        raise DomainError(f"epsilon must be a power of 1/2 below 1, got {text!r}")
    return Fraction(1, q)


@dataclass(frozen=True)
class HardFunction:
    """``j is None`` for the base function ``2*val``; otherwise ``g_{j,k}``."""

    params: FamilyParams
    j: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if (self.j is None) != (self.k is None):
            raise DomainError("a perturbed function needs both j and k")
        if self.j is not None:
            if not 1 <= self.j <= self.params.m_prime:
                raise DomainError(f"j={self.j} outside [1, {self.params.m_prime}]")
            if not 1 <= self.k <= self.params.block_count:
                raise DomainError(f"k={self.k} outside [1, {self.params.block_count}]")

    @classmethod
    def base(cls, params: FamilyParams) -> "HardFunction":
        return cls(params)

    @property
    def is_base(self) -> bool:
        return self.j is None

    def __call__(self, x: BitPoint) -> int:
        return evaluate(self, x)

    def __str__(self) -> str:
        return "2val" if self.is_base else f"g_{self.j},{self.k}"

    def to_descriptor(self) -> dict:
        kind = "base" if self.is_base else {"j": self.j, "k": self.k}
        return {"m": self.params.m, "epsilon": format_epsilon(self.params.epsilon), "kind": kind}

    @classmethod
    def from_descriptor(cls, desc: dict) -> "HardFunction":
        try:
            params = FamilyParams(int(desc["m"]), parse_epsilon(str(desc["epsilon"])))
            kind = desc["kind"]
        except KeyError as exc:
            raise DomainError(f"descriptor is missing {exc}") from exc
        if kind == "base":
            return cls(params)
        if isinstance(kind, dict):
            return cls(params, int(kind["j"]), int(kind["k"]))
        raise DomainError(f"unknown function kind {kind!r}")


def block_index(x: BitPoint, p: FamilyParams) -> int:
    if x.m != p.m:
        raise DomainError(f"point has {x.m} bits, expected {p.m}")
    return (x.value >> p.m_prime) + 1


def block_points(k: int, p: FamilyParams) -> Iterator[BitPoint]:
    start = (k - 1) << p.m_prime
    for v in range(start, start + p.block_size):
        yield BitPoint(v, p.m)


def evaluate(h: HardFunction, x: BitPoint, offset: int = 0) -> int:
    if x.m != h.params.m:
        raise DomainError(f"point has {x.m} bits, expected {h.params.m}")
    return _evaluate_value(h, x.value) + offset


def _evaluate_value(h: HardFunction, value: int) -> int:
    v = 2 * value
    if h.j is not None and (value >> (h.j - 1)) & 1 and (value >> h.params.m_prime) + 1 == h.k:
        v -= (1 << h.j) + 1
    return v


@dataclass(frozen=True)
class WeightedSupport:
    entries: Tuple[Tuple[HardFunction, Fraction], ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def total_mass(self) -> Fraction:
        return sum((w for _, w in self.entries), Fraction(0))


def support(p: FamilyParams) -> WeightedSupport:
    entries = [(HardFunction(p), Fraction(1, 2))]
    for j in range(1, p.m_prime + 1):
        for k in range(1, p.block_count + 1):
            entries.append((HardFunction(p, j, k), p.perturbed_mass))
    return WeightedSupport(tuple(entries))


def sample(p: FamilyParams, rng: np.random.Generator) -> HardFunction:
    if rng.random() < 0.5:
        return HardFunction(p)
    i = int(rng.integers(p.m_prime * p.block_count))
    return HardFunction(p, i // p.block_count + 1, i % p.block_count + 1)


def lift_to_hypergrid(h: HardFunction, p: DomainParams) -> Callable[[GridPoint], int]:
    """Return ``y -> h(phi(y))`` on ``[n]^d``."""
    if p.m != h.params.m:
        raise DomainError(f"grid [{p.n}]^{p.d} maps to m={p.m}, function has m={h.params.m}")

    n, ell, d = p.n, p.ell, p.d

    def lifted(y: Sequence[int]) -> int:
        # inlined phi; it dominates pair-tester runtime
        if len(y) != d:
            raise DomainError(f"grid point {tuple(y)} has {len(y)} coordinates, expected {d}")
        value = 0
        for i, c in enumerate(y):
            if not 0 <= c < n:
                raise DomainError(f"coordinate {c} outside [0, {n})")
            value |= c << (i * ell)
        return _evaluate_value(h, value)

    lifted.function = h
    lifted.domain_params = p
    return lifted


def value_table(h: HardFunction) -> List[int]:
    """Values of ``h`` indexed by ``val(x)``."""
    if h.params.m > MAX_CSV_BITS:
        raise CapacityError(f"explicit tables are limited to m <= {MAX_CSV_BITS}")
    m = h.params.m
    return [evaluate(h, BitPoint(v, m)) for v in range(1 << m)]


def dump_csv(h: HardFunction) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bitstring", "value"])
    cube = Hypercube(h.params.m)
    for x, value in zip(cube.points(), value_table(h)):
        writer.writerow([str(x), value])
    return buf.getvalue()
