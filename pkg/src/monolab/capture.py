"""Capture coordinates and the error floor they imply for non-adaptive distinguishers.

A pair of distinct points captures the highest bit position where they
differ.  A comparison-based procedure that queries ``X`` can only tell
``g_{j,k}`` apart from ``2*val`` if the part of ``X`` inside block ``k``
captures ``j``; every uncaptured ``(j, k)`` is therefore confused with the base
function, which forces an error of at least ``min(count * eps/m', 1/2)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Set, Tuple

from .errors import DomainError
from .family import FamilyParams, HardFunction, block_index, evaluate
from .hypergrid import BitPoint, DomainParams


class QuerySet(tuple):
    """Deduplicated points of one cube ``{0,1}^m``, kept in first-seen order."""

    def __new__(cls, points: Iterable[BitPoint] = ()):
        seen = dict.fromkeys(points)
        ms = {x.m for x in seen}
        if len(ms) > 1:
            raise DomainError(f"query points have mixed lengths {sorted(ms)}")
        return super().__new__(cls, seen)

    @property
    def m(self):
        return self[0].m if self else None

    @classmethod
    def parse(cls, text: str) -> "QuerySet":
        return cls(BitPoint.parse(line) for line in text.splitlines() if line.strip())

    def format(self) -> str:
        return "".join(f"{x}\n" for x in self)


def capture_coordinate(x: BitPoint, y: BitPoint) -> int:
    if x.m != y.m:
        raise DomainError(f"length mismatch: {x.m} vs {y.m}")
    if x == y:
        raise DomainError("a point does not capture anything with itself")
    return (x.value ^ y.value).bit_length()


def captured_set(points: Iterable[BitPoint]) -> Set[int]:
    pts = QuerySet(points)
    return {capture_coordinate(x, y) for x, y in itertools.combinations(pts, 2)}


@dataclass(frozen=True)
class BlockCapture:
    queries: int
    captured: FrozenSet[int]


@dataclass(frozen=True)
class CaptureReport:
    params: FamilyParams
    per_block: Dict[int, BlockCapture]
    indistinguishable_count: int
    error_lower_bound: Fraction

    def uncaptured(self) -> List[Tuple[int, int]]:
        p = self.params
        return [
            (j, k)
            for j in range(1, p.m_prime + 1)
            for k in range(1, p.block_count + 1)
            if j not in self.per_block[k].captured
        ]

    def to_json(self) -> dict:
        def frac(q):
            return f"{q.numerator}/{q.denominator}"

        return {
            "m": self.params.m,
            "epsilon": frac(self.params.epsilon),
            "mPrime": self.params.m_prime,
            "blockCount": self.params.block_count,
            "perBlock": {
                str(k): {"queriesInBlock": b.queries, "capturedCoords": sorted(b.captured)}
                for k, b in sorted(self.per_block.items())
            },
            "indistinguishableCount": self.indistinguishable_count,
            "errorLowerBound": frac(self.error_lower_bound),
        }


def analyze(X: Iterable[BitPoint], p: FamilyParams) -> CaptureReport:
    X = QuerySet(X)
    if X and X.m != p.m:
        raise DomainError(f"query points have {X.m} bits, expected {p.m}")
    groups: Dict[int, List[BitPoint]] = {k: [] for k in range(1, p.block_count + 1)}
    for x in X:
        groups[block_index(x, p)].append(x)
    per_block = {}
    count = 0
    for k, pts in groups.items():
        # captures above m' never coincide with a perturbed coordinate
        cap = frozenset(j for j in captured_set(pts) if j <= p.m_prime)
        per_block[k] = BlockCapture(len(pts), cap)
        count += p.m_prime - len(cap)
    bound = min(p.perturbed_mass * count, Fraction(1, 2))
    return CaptureReport(p, per_block, count, bound)


def order_pattern(values: Iterable[int]) -> Tuple[int, ...]:
    """Rank of each value among all of them (0 = smallest)."""
    values = list(values)
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0] * len(values)
    for r, i in enumerate(order):
        ranks[i] = r
    return tuple(ranks)


def indistinguishable_exact(X: Iterable[BitPoint], p: FamilyParams) -> Set[Tuple[int, int]]:
    """All ``(j, k)`` whose ``g_{j,k}`` orders ``X`` exactly as ``2*val`` does."""
    X = QuerySet(X)
    base = HardFunction(p)
    target = order_pattern(evaluate(base, x) for x in X)
    out = set()
    for j in range(1, p.m_prime + 1):
        for k in range(1, p.block_count + 1):
            g = HardFunction(p, j, k)
            if order_pattern(evaluate(g, x) for x in X) == target:
                out.add((j, k))
    return out


def greedy_capture_set(p: FamilyParams, size: int) -> QuerySet:
    """A query set built to capture as many ``(j, k)`` as possible.

    Points are added one at a time, each chosen to capture the most new
    coordinates inside its block (ties broken by smallest ``val``).
    """
    chosen: List[BitPoint] = []
    for _ in range(size):
        best = None
        best_gain = -1
        current = analyze(chosen, p).indistinguishable_count
        for v in range(1 << p.m):
            x = BitPoint(v, p.m)
            if x in chosen:
                continue
            gain = current - analyze(chosen + [x], p).indistinguishable_count
            if gain > best_gain:
                best, best_gain = x, gain
        if best is None:
            break
        chosen.append(best)
    return QuerySet(chosen)


class QueryBound(NamedTuple):
    display: Fraction
    threshold: Fraction
    m_prime: int

    @property
    def gap(self) -> Fraction:
        return self.threshold - self.display


def query_lower_bound(n: int, d: int, epsilon) -> QueryBound:
    """Both forms of the query lower bound for ``[n]^d`` at farness ``epsilon``.

    ``display`` is ``(d*log2(n) - log2(1/eps)) / (8*eps)``; ``threshold`` is
    ``m'/(8*eps)`` with ``m' = d*log2(n) + 1 - log2(1/eps)``.  They differ by
    ``1/(8*eps)``.
    """
    dp = DomainParams(n, d)
    fp = FamilyParams(dp.m, Fraction(epsilon))
    eight_eps = 8 * fp.epsilon
    display = Fraction(dp.m - fp.log_inv_epsilon) / eight_eps
    return QueryBound(display, fp.m_prime / eight_eps, fp.m_prime)
