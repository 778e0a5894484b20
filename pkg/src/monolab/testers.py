"""Executable tester models: oracles, comparison trees and their evaluation.

A deterministic comparison-based distinguisher is a :class:`Node`/:class:`Leaf`
tree.  A node at depth ``s`` queries one point and branches on the rank
(``0..s``) of the answer among the ``s`` answers seen so far, so decisions
depend on the order of answers only.  Randomized testers are seeded
distributions over such trees.
"""

from __future__ import annotations

import bisect
import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binomtest

from .capture import QuerySet, order_pattern
from .errors import CapacityError, ContractViolation, DomainError
from .family import FamilyParams, HardFunction, evaluate, lift_to_hypergrid, sample, support
from .hypergrid import BitPoint, DomainParams


class Verdict(enum.Enum):
    ACCEPT = "accept"  # declares f = 2val / monotone
    REJECT = "reject"  # declares f != 2val / far

    def __str__(self):
        return self.value


class FunctionOracle:
    """Query access to ``evaluator`` that logs every query, repeats included."""

    def __init__(self, evaluator: Callable[[Hashable], int]):
        self.evaluator = evaluator
        self.log: List[Tuple[Hashable, int]] = []

    def __call__(self, point) -> int:
        value = self.evaluator(point)
        self.log.append((point, value))
        return value

    query = __call__

    @property
    def count(self) -> int:
        return len(self.log)

    @classmethod
    def for_function(cls, h: HardFunction, lift: Optional[DomainParams] = None) -> "FunctionOracle":
        if lift is None:
            return cls(lambda x: evaluate(h, x))
        return cls(lift_to_hypergrid(h, lift))


@dataclass(frozen=True)
class Leaf:
    verdict: Verdict


@dataclass(frozen=True)
class Node:
    point: BitPoint
    children: Tuple["ComparisonTree", ...]


ComparisonTree = Union[Leaf, Node]


def tree_depth(tree: ComparisonTree) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(c) for c in tree.children)


def check_tree(tree: ComparisonTree, budget: Optional[int] = None) -> None:
    """Raise :class:`ContractViolation` unless ``tree`` is well formed."""

    def walk(node, path):
        if isinstance(node, Leaf):
            if not isinstance(node.verdict, Verdict):
                raise ContractViolation(f"leaf holds {node.verdict!r}, not a Verdict")
            return
        s = len(path)
        if len(node.children) != s + 1:
            raise ContractViolation(f"node at depth {s} has {len(node.children)} children, expected {s + 1}")
        if node.point in path:
            raise ContractViolation(f"point {node.point} repeats on a root-to-leaf path")
        if path and node.point.m != path[0].m:
            raise ContractViolation("mixed point lengths in tree")
        for child in node.children:
            walk(child, path + (node.point,))

    walk(tree, ())
    if budget is not None and tree_depth(tree) > budget:
        raise ContractViolation(f"tree depth {tree_depth(tree)} exceeds budget {budget}")


def tree_to_json(tree: ComparisonTree) -> dict:
    if isinstance(tree, Leaf):
        return {"verdict": tree.verdict.value}
    return {"query": str(tree.point), "children": [tree_to_json(c) for c in tree.children]}


def tree_from_json(doc: dict) -> ComparisonTree:
    try:
        if "verdict" in doc:
            return Leaf(Verdict(doc["verdict"]))
        return Node(BitPoint.parse(doc["query"]), tuple(tree_from_json(c) for c in doc["children"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"malformed comparison tree: {exc}") from exc


@dataclass(frozen=True)
class Transcript:
    queries: Tuple[Tuple[Hashable, int], ...]
    branches: Tuple[int, ...]

    def to_json(self) -> list:
        return [[str(x), v] for x, v in self.queries]


def run_tree(tree: ComparisonTree, oracle: FunctionOracle) -> Tuple[Verdict, Transcript]:
    seen: List[int] = []
    queries = []
    branches = []
    node = tree
    while isinstance(node, Node):
        value = oracle(node.point)
        rank = bisect.bisect_left(seen, value)
        if rank < len(seen) and seen[rank] == value:
            raise ContractViolation(f"oracle returned duplicate value {value} at {node.point}")
        seen.insert(rank, value)
        queries.append((node.point, value))
        branches.append(rank)
        node = node.children[rank]
    return node.verdict, Transcript(tuple(queries), tuple(branches))


def _base_ranks(points: Sequence[BitPoint]) -> Tuple[int, ...]:
    return order_pattern(2 * x.value for x in points)


@dataclass(frozen=True)
class NonAdaptiveDistinguisher:
    """Query ``points`` upfront; answer ``verdict`` if their order matches ``pattern``, else reject."""

    points: QuerySet
    pattern: Tuple[int, ...]
    verdict: Verdict

    def __post_init__(self):
        if len(self.pattern) != len(self.points):
            raise ContractViolation("pattern length must equal the number of queries")

    def decide(self, values: Sequence[int]) -> Verdict:
        return self.verdict if order_pattern(values) == self.pattern else Verdict.REJECT

    def run(self, oracle: FunctionOracle) -> Verdict:
        return self.decide([oracle(x) for x in self.points])

    def to_json(self) -> dict:
        return {
            "queries": [str(x) for x in self.points],
            "expectedOrderPattern": list(self.pattern),
            "leafVerdict": self.verdict.value,
        }


def derive_non_adaptive(tree: ComparisonTree, p: Optional[FamilyParams] = None) -> NonAdaptiveDistinguisher:
    """Keep only the path the base function ``2*val`` takes through ``tree``.

    Any deviation from the base order is answered with a rejection, which
    never increases the error over the hard distribution.
    """
    check_tree(tree)
    path: List[BitPoint] = []
    seen: List[int] = []
    node = tree
    while isinstance(node, Node):
        if p is not None and node.point.m != p.m:
            raise DomainError(f"tree point has {node.point.m} bits, expected {p.m}")
        rank = bisect.bisect_left(seen, node.point.value)
        seen.insert(rank, node.point.value)
        path.append(node.point)
        node = node.children[rank]
    return NonAdaptiveDistinguisher(QuerySet(path), _base_ranks(path), node.verdict)


@dataclass(frozen=True)
class PatternDistinguisher:
    """Non-adaptive distinguisher with a verdict per observed order pattern."""

    points: QuerySet
    table: Dict[Tuple[int, ...], Verdict] = field(hash=False)
    default: Verdict = Verdict.REJECT

    def decide(self, values: Sequence[int]) -> Verdict:
        return self.table.get(order_pattern(values), self.default)

    def run(self, oracle: FunctionOracle) -> Verdict:
        return self.decide([oracle(x) for x in self.points])


Distinguisher = Union[Leaf, Node, NonAdaptiveDistinguisher, PatternDistinguisher]


def _run(dist: Distinguisher, oracle: FunctionOracle) -> Verdict:
    if isinstance(dist, (Leaf, Node)):
        return run_tree(dist, oracle)[0]
    return dist.run(oracle)


def _wrong(h: HardFunction, verdict: Verdict) -> bool:
    return (verdict is Verdict.REJECT) if h.is_base else (verdict is Verdict.ACCEPT)


def exact_error(dist: Distinguisher, p: FamilyParams) -> Fraction:
    """Probability mass of the support on which ``dist`` answers wrongly."""
    err = Fraction(0)
    for h, mass in support(p):
        if _wrong(h, _run(dist, FunctionOracle.for_function(h))):
            err += mass
    return err


def optimal_distinguisher(X, p: FamilyParams) -> Tuple[PatternDistinguisher, Fraction]:
    """Best verdict for each order pattern the support can produce on ``X``."""
    X = QuerySet(X)
    masses: Dict[Tuple[int, ...], List[Fraction]] = {}
    for h, mass in support(p):
        pat = order_pattern(evaluate(h, x) for x in X)
        acc = masses.setdefault(pat, [Fraction(0), Fraction(0)])
        acc[0 if h.is_base else 1] += mass
    table = {}
    err = Fraction(0)
    for pat, (base_mass, pert_mass) in masses.items():
        # accept errs on the perturbed mass, reject on the base mass
        if base_mass > pert_mass:
            table[pat] = Verdict.ACCEPT
            err += pert_mass
        else:
            table[pat] = Verdict.REJECT
            err += base_mass
    return PatternDistinguisher(X, table), err


def best_distinguisher_exhaustive(p: FamilyParams, t: int) -> Tuple[PatternDistinguisher, Fraction]:
    """Minimum exact error over all non-adaptive distinguishers with ``t`` queries."""
    if p.m > 4 or t > 3:
        raise CapacityError("exhaustive search is limited to m <= 4 and t <= 3")
    if t < 0:
        raise DomainError("budget must be non-negative")
    best = None
    cube = [BitPoint(v, p.m) for v in range(1 << p.m)]
    for X in itertools.combinations(cube, min(t, len(cube))):
        cand = optimal_distinguisher(X, p)
        if best is None or cand[1] < best[1]:
            best = cand
    return best


def random_tree(
    p: FamilyParams,
    depth: int,
    rng: np.random.Generator,
    local: float = 0.5,
) -> ComparisonTree:
    """A random complete comparison tree of the given depth.

    With probability ``local`` a query is a one-bit neighbour of an earlier
    point on its path (so the tree has a chance to catch perturbed pairs);
    otherwise it is uniform over the cube.
    """
    size = 1 << p.m
    if depth > size:
        raise DomainError(f"depth {depth} exceeds the {size} available points")

    def pick(path):
        while True:
            if path and rng.random() < local:
                anchor = path[int(rng.integers(len(path)))]
                x = anchor.flip(int(rng.integers(1, p.m + 1)))
            else:
                x = BitPoint(int(rng.integers(size)), p.m)
            if x not in path:
                return x

    def build(path):
        if len(path) == depth:
            return Leaf(Verdict.ACCEPT if rng.random() < 0.5 else Verdict.REJECT)
        x = pick(path)
        return Node(x, tuple(build(path + (x,)) for _ in range(len(path) + 1)))

    return build(())


def tree_tester(tree: ComparisonTree):
    """Adapt a tree to the ``tester(oracle, rng)`` calling convention."""

    def tester(oracle, rng=None):
        return run_tree(tree, oracle)[0]

    tester.tree = tree
    return tester


_PAIR_CHUNK = 64


def pair_budget(p: DomainParams, eps) -> int:
    return math.ceil(64 / Fraction(eps) * p.d * p.ell)


def pair_tester(
    oracle: Callable,
    p: DomainParams,
    eps,
    rng: np.random.Generator,
    budget: Optional[int] = None,
) -> Verdict:
    """One-sided dimension/power-of-two-gap pair tester on ``[n]^d``.

    Each of ``budget`` rounds picks a dimension, a point and a gap in
    ``{1, 2, ..., n/2}``; a round whose shifted point leaves the grid is
    skipped.  Rejects on the first violated pair.
    """
    if budget is None:
        budget = pair_budget(p, eps)
    if budget < 1:
        raise DomainError("budget must be at least 1")
    done = 0
    while done < budget:
        chunk = min(_PAIR_CHUNK, budget - done)
        done += chunk
        dims = rng.integers(p.d, size=chunk).tolist()
        lows = rng.integers(p.n, size=(chunk, p.d)).tolist()
        gaps = (1 << rng.integers(p.ell, size=chunk)).tolist()
        for i, y, gap in zip(dims, lows, gaps):
            if y[i] + gap >= p.n:
                continue
            hi = list(y)
            hi[i] += gap
            if oracle(tuple(y)) > oracle(tuple(hi)):
                return Verdict.REJECT
    return Verdict.ACCEPT


@dataclass(frozen=True)
class MonteCarloEstimate:
    errors: int
    trials: int
    ci_low: float
    ci_high: float
    seed: int

    @property
    def error(self) -> float:
        return self.errors / self.trials

    def contains(self, value) -> bool:
        return self.ci_low <= float(value) <= self.ci_high


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def monte_carlo_error(
    tester: Callable,
    p: FamilyParams,
    trials: int,
    seed: int,
    lift: Optional[DomainParams] = None,
) -> MonteCarloEstimate:
    """Empirical error of ``tester(oracle, rng)`` on functions drawn from the hard distribution.

    With ``lift`` the tester sees the lifted function on ``[n]^d``.  One
    seeded stream drives both the function draws and the tester's coins.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    wrong = 0
    for _ in range(trials):
        h = sample(p, rng)
        verdict = tester(FunctionOracle.for_function(h, lift), rng)
        wrong += _wrong(h, verdict)
    lo, hi = wilson_interval(wrong, trials)
    return MonteCarloEstimate(wrong, trials, lo, hi, seed)
