"""Exact distance to monotonicity on desk-scale domains.

The number of values that must change to make ``f`` monotone equals the size
of a minimum vertex cover of its violation graph: the changed points must
touch every violated pair, and :func:`repair` turns any cover into a monotone
function that agrees with ``f`` off the cover.  A matching of violated pairs
certifies the lower bound.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .errors import CapacityError, ContractViolation, DomainError
from .family import HardFunction, block_points, evaluate
from .hypergrid import BitPoint, DomainParams, Hypercube, Hypergrid, phi, phi_inverse

Domain = Union[Hypercube, Hypergrid]

MAX_DOMAIN_SIZE = 1 << 16
MAX_COVER_VERTICES = 1 << 12


class FunctionTable:
    """A total map from the points of ``domain`` to integers."""

    def __init__(self, domain: Domain, values: Dict[Hashable, int]):
        if domain.size > MAX_DOMAIN_SIZE:
            raise CapacityError(f"domain of size {domain.size} exceeds {MAX_DOMAIN_SIZE}")
        if len(values) != domain.size or not all(domain.contains(u) for u in values):
            raise DomainError("values must assign exactly one integer to every domain point")
        self.domain = domain
        self.values = dict(values)

    @classmethod
    def from_callable(cls, domain: Domain, f: Callable) -> "FunctionTable":
        if domain.size > MAX_DOMAIN_SIZE:
            raise CapacityError(f"domain of size {domain.size} exceeds {MAX_DOMAIN_SIZE}")
        return cls(domain, {u: int(f(u)) for u in domain.points()})

    @classmethod
    def from_hard_function(cls, h: HardFunction, lift: Optional[DomainParams] = None) -> "FunctionTable":
        if lift is None:
            return cls.from_callable(Hypercube(h.params.m), lambda x: evaluate(h, x))
        if lift.m != h.params.m:
            raise DomainError(f"grid [{lift.n}]^{lift.d} maps to m={lift.m}, function has m={h.params.m}")
        return cls.from_callable(Hypergrid(lift), lambda y: evaluate(h, phi(y, lift)))

    @classmethod
    def read_csv(cls, text: str) -> "FunctionTable":
        """Parse a ``bitstring,value`` table over a hypercube."""
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows and rows[0][0].strip() == "bitstring":
            rows = rows[1:]
        if not rows:
            raise DomainError("empty value table")
        try:
            parsed = [(BitPoint.parse(r[0]), int(r[1])) for r in rows]
        except (IndexError, ValueError) as exc:
            raise DomainError(f"malformed value table: {exc}") from exc
        m = parsed[0][0].m
        values = {}
        for x, v in parsed:
            if x.m != m or x in values:
                raise DomainError(f"bad or repeated point {x}")
            values[x] = v
        return cls(Hypercube(m), values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bitstring" if isinstance(self.domain, Hypercube) else "point", "value"])
        for u in self.points():
            writer.writerow([self.domain.format_point(u), self.values[u]])
        return buf.getvalue()

    def points(self) -> List:
        return sorted(self.values, key=self.domain.sort_key)

    def __getitem__(self, u) -> int:
        return self.values[u]

    def __eq__(self, other):
        return (
            isinstance(other, FunctionTable)
            and other.domain == self.domain
            and other.values == self.values
        )

    def diff(self, other: "FunctionTable") -> Set:
        return {u for u, v in self.values.items() if other.values[u] != v}


@dataclass(frozen=True)
class ViolationGraph:
    """Violated comparable pairs ``(u, v)`` with ``u < v`` and ``f(u) > f(v)``."""

    domain: Domain
    edges: Tuple[Tuple[Hashable, Hashable], ...]

    @property
    def vertices(self) -> Set:
        return {u for e in self.edges for u in e}

    def __len__(self):
        return len(self.edges)

    def adjacency(self) -> Dict[Hashable, Set]:
        adj: Dict[Hashable, Set] = {}
        for u, v in self.edges:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return adj


def violations(f: FunctionTable) -> ViolationGraph:
    dom = f.domain
    key = dom.sort_key
    edges = []
    for v in f.points():
        fv = f.values[v]
        for u in dom.strict_predecessors(v):
            if f.values[u] > fv:
                edges.append((u, v))
    edges.sort(key=lambda e: (key(e[0]), key(e[1])))
    return ViolationGraph(dom, tuple(edges))


class _CoverSearch:
    """Branch and bound for minimum vertex cover on small graphs.

    Each connected component is solved separately.  Degree-one vertices are
    resolved by taking their neighbour; otherwise the search branches on a
    maximum-degree vertex ``v`` (take ``v`` / take all of ``N(v)``) and prunes
    with a greedy maximal matching as the lower bound.
    """

    def __init__(self, adj: Dict[int, Set[int]]):
        self.adj = adj

    def solve(self) -> Set[int]:
        cover: Set[int] = set()
        alive = {v for v, nb in self.adj.items() if nb}
        for comp in self._components(alive):
            cover |= self._solve_component(comp)
        return cover

    def _components(self, alive: Set[int]) -> List[Set[int]]:
        seen: Set[int] = set()
        comps = []
        for s in sorted(alive):
            if s in seen:
                continue
            comp = {s}
            stack = [s]
            while stack:
                u = stack.pop()
                for w in self.adj[u]:
                    if w in alive and w not in comp:
                        comp.add(w)
                        stack.append(w)
            seen |= comp
            comps.append(comp)
        return comps

    def _solve_component(self, comp: Set[int]) -> Set[int]:
        self.best: Optional[Set[int]] = None
        self._branch(frozenset(comp), set())
        return self.best

    def _lower_bound(self, alive: frozenset) -> int:
        matched: Set[int] = set()
        size = 0
        for u in alive:
            if u in matched:
                continue
            for w in self.adj[u]:
                if w in alive and w not in matched:
                    matched.update((u, w))
                    size += 1
                    break
        return size

    def _branch(self, alive: frozenset, chosen: Set[int]) -> None:
        alive = set(alive)
        chosen = set(chosen)
        # reductions: drop isolated vertices, take the neighbour of a leaf
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if u not in alive:
                    continue
                nb = [w for w in self.adj[u] if w in alive]
                if not nb:
                    alive.discard(u)
                    changed = True
                elif len(nb) == 1:
                    chosen.add(nb[0])
                    alive.discard(nb[0])
                    alive.discard(u)
                    changed = True
        if self.best is not None and len(chosen) + self._lower_bound(frozenset(alive)) >= len(self.best):
            return
        if not alive:
            self.best = chosen
            return
        v = max(alive, key=lambda u: (sum(1 for w in self.adj[u] if w in alive), -u))
        nbrs = {w for w in self.adj[v] if w in alive}
        self._branch(frozenset(alive - {v}), chosen | {v})
        self._branch(frozenset(alive - nbrs - {v}), chosen | nbrs)


def min_vertex_cover(g: ViolationGraph) -> Set:
    """A minimum-cardinality vertex set touching every edge (exact)."""
    verts = sorted(g.vertices, key=g.domain.sort_key)
    if len(verts) > MAX_COVER_VERTICES:
        raise CapacityError(f"{len(verts)} violated points exceed the exact-cover limit {MAX_COVER_VERTICES}")
    index = {u: i for i, u in enumerate(verts)}
    adj: Dict[int, Set[int]] = {i: set() for i in range(len(verts))}
    for u, v in g.edges:
        adj[index[u]].add(index[v])
        adj[index[v]].add(index[u])
    return {verts[i] for i in _CoverSearch(adj).solve()}


def maximum_matching(g: ViolationGraph) -> List[Tuple]:
    graph = nx.Graph()
    graph.add_edges_from(g.edges)
    key = g.domain.sort_key
    pairs = []
    for a, b in nx.max_weight_matching(graph, maxcardinality=True):
        pairs.append((a, b) if key(a) < key(b) else (b, a))
    return sorted(pairs, key=lambda e: (key(e[0]), key(e[1])))


def is_vertex_cover(g: ViolationGraph, cover: Iterable) -> bool:
    cover = set(cover)
    return all(u in cover or v in cover for u, v in g.edges)


def repair(f: FunctionTable, cover: Iterable) -> FunctionTable:
    """Reassign the cover points so the result is monotone.

    Cover points are visited in increasing ``val`` order (a linear extension of
    both the cube and the grid order) and each gets the largest repaired value
    among its strict predecessors, or ``min(f)`` when it has none.
    """
    cover = set(cover)
    g = violations(f)
    if not is_vertex_cover(g, cover):
        raise ContractViolation("cover does not touch every violated pair")
    dom = f.domain
    floor = min(f.values.values())
    out = dict(f.values)
    for x in sorted(cover, key=dom.sort_key):
        out[x] = max((out[u] for u in dom.strict_predecessors(x)), default=floor)
    return FunctionTable(dom, out)


@dataclass(frozen=True)
class DistanceCertificate:
    distance: Fraction
    cover: Tuple
    matching: Tuple[Tuple, ...]
    domain_size: int

    @property
    def tight(self) -> bool:
        return len(self.matching) == len(self.cover)

    def check(self, f: FunctionTable) -> bool:
        """Check the certificate against ``f``; true iff every stated fact holds."""
        g = violations(f)
        edge_set = set(g.edges)
        cover = set(self.cover)
        if len(cover) != len(self.cover) or not is_vertex_cover(g, cover):
            return False
        ends = [u for e in self.matching for u in e]
        if len(ends) != len(set(ends)) or not all(tuple(e) in edge_set for e in self.matching):
            return False
        return (
            len(self.matching) <= len(cover)
            and self.domain_size == f.domain.size
            and self.distance == Fraction(len(cover), f.domain.size)
        )

    def to_json(self, domain: Domain) -> dict:
        fmt = domain.format_point
        return {
            "distance": f"{self.distance.numerator}/{self.distance.denominator}",
            "domainSize": self.domain_size,
            "coverSize": len(self.cover),
            "matchingSize": len(self.matching),
            "cover": [fmt(u) for u in self.cover],
            "matching": [[fmt(u), fmt(v)] for u, v in self.matching],
        }

    @classmethod
    def from_json(cls, doc: dict, domain: Domain) -> "DistanceCertificate":
        try:
            num, den = str(doc["distance"]).split("/")
            parse = domain.parse_point
            return cls(
                Fraction(int(num), int(den)),
                tuple(parse(u) for u in doc["cover"]),
                tuple((parse(u), parse(v)) for u, v in doc["matching"]),
                int(doc["domainSize"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DomainError(f"malformed certificate: {exc}") from exc


def distance_to_monotone(f: FunctionTable) -> DistanceCertificate:
    g = violations(f)
    key = f.domain.sort_key
    cover = tuple(sorted(min_vertex_cover(g), key=key))
    matching = tuple(maximum_matching(g))
    cert = DistanceCertificate(Fraction(len(cover), f.domain.size), cover, matching, f.domain.size)
    if len(matching) > len(cover):
        raise ContractViolation("matching larger than cover; cover search is broken")
    return cert


def witness_matching(h: HardFunction, lift: Optional[DomainParams] = None) -> List[Tuple]:
    """The violated pairs ``(x, x ^ e_j)`` for ``x`` in block ``k`` with ``x_j = 0``.

    With ``lift`` the pairs are returned as grid points.
    """
    if h.is_base:
        raise DomainError("the base function has no violations to witness")
    pairs = [(x, x.flip(h.j)) for x in block_points(h.k, h.params) if not x.bit(h.j)]
    if lift is not None:
        if lift.m != h.params.m:
            raise DomainError(f"grid [{lift.n}]^{lift.d} maps to m={lift.m}, function has m={h.params.m}")
        pairs = [(phi_inverse(x, lift), phi_inverse(y, lift)) for x, y in pairs]
    return pairs
