"""Signed directed graphs and the structural analyses the simulator relies on.

A signed digraph is a simple directed graph on nodes ``0..n-1`` (``n >= 3``)
where every arc carries a sign: ``+1`` for friendly/cooperative links and
``-1`` for antagonistic ones.  This module provides the graph value type,
positive-cluster partitions, the strong-balance test, connectivity queries,
unions over graph lists, and a plain-text file format.

All graph objects are immutable after construction and all operations are
pure functions, so graphs can be shared freely across parallel runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

POSITIVE = 1
NEGATIVE = -1

# Subgraph selectors for connectivity queries.
ALL = "all"
POSITIVE_ONLY = "positive"
NEGATIVE_ONLY = "negative"

_SELECTORS = (ALL, POSITIVE_ONLY, NEGATIVE_ONLY)


class GraphError(ValueError):
    """Invalid graph construction or query."""


class SignConflict(GraphError):
    """The same ordered node pair appears with both signs."""

    def __init__(self, src: int, dst: int):
        super().__init__(f"arc ({src}, {dst}) appears with both signs")
        self.arc = (src, dst)


class EmptyWindow(GraphError):
    """A union was requested over an empty list of graphs."""


class GraphParseError(GraphError):
    """Malformed graph text; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SignedDigraph:
    """Simple signed digraph on a fixed node set ``0..n-1``.

    Invariants enforced at construction: no self-loops, at most one arc per
    ordered pair, exactly one sign per arc, node ids in range, ``n >= 3``.
    """

    __slots__ = ("n", "_signs", "_hash")

    def __init__(self, n: int, arcs: Iterable[tuple[int, int, int]] = ()):
        if n < 3:
            raise GraphError(f"node count must be >= 3, got {n}")
        self.n = int(n)
        signs: dict[tuple[int, int], int] = {}
        for src, dst, sign in arcs:
            if not (0 <= src < n and 0 <= dst < n):
                raise GraphError(f"arc ({src}, {dst}) outside node range [0, {n})")
            if src == dst:
                raise GraphError(f"self-loop ({src}, {src}) not allowed")
            if sign not in (POSITIVE, NEGATIVE):
                raise GraphError(f"arc ({src}, {dst}) has invalid sign {sign!r}")
            prev = signs.get((src, dst))
            if prev is not None and prev != sign:
                raise SignConflict(src, dst)
            signs[(src, dst)] = sign
        self._signs = signs
        self._hash: int | None = None

    # -- basic accessors ----------------------------------------------------

    def arcs(self) -> list[tuple[int, int, int]]:
        """All arcs as sorted (src, dst, sign) triples."""
        return sorted((s, d, g) for (s, d), g in self._signs.items())

    def arc_pairs(self, selector: str = ALL) -> list[tuple[int, int]]:
        """Sorted (src, dst) pairs of the selected subgraph."""
        _check_selector(selector)
        if selector == ALL:
            return sorted(self._signs)
        want = POSITIVE if selector == POSITIVE_ONLY else NEGATIVE
        return sorted(p for p, g in self._signs.items() if g == want)

    def sign(self, src: int, dst: int) -> int | None:
        return self._signs.get((src, dst))

    def has_arc(self, src: int, dst: int) -> bool:
        return (src, dst) in self._signs

    @property
    def arc_count(self) -> int:
        return len(self._signs)

    def negative_arc_count(self) -> int:
        return sum(1 for g in self._signs.values() if g == NEGATIVE)

    def positive_arc_count(self) -> int:
        return len(self._signs) - self.negative_arc_count()

    def out_adjacency(self, selector: str = ALL) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for src, dst in self.arc_pairs(selector):
            adj[src].append(dst)
        return adj

    def undirected_adjacency(self, selector: str = ALL) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for src, dst in self.arc_pairs(selector):
            adj[src].append(dst)
            adj[dst].append(src)
        return adj

    # -- value semantics ----------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignedDigraph):
            return NotImplemented
        return self.n == other.n and self._signs == other._signs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, tuple(self.arcs())))
        return self._hash

    def __repr__(self) -> str:
        return f"SignedDigraph(n={self.n}, arcs={self.arcs()!r})"


def _check_selector(selector: str) -> None:
    if selector not in _SELECTORS:
        raise GraphError(f"unknown subgraph selector {selector!r}")


@dataclass(frozen=True)
class PositiveClusterPartition:
    """Partition of the node set into positive clusters.

    Each cluster is a maximal weakly connected component of the positive
    subgraph, listed in ascending order of its smallest member.  Negative
    arcs may exist inside a cluster.
    """

    clusters: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.clusters)

    def cluster_of(self, node: int) -> int:
        for idx, members in enumerate(self.clusters):
            if node in members:
                return idx
        raise GraphError(f"node {node} not covered by partition")


@dataclass(frozen=True)
class BalanceResult:
    """Outcome of the strong-balance test.

    ``vacuous`` is True when the graph has no negative arcs, in which case
    the condition holds trivially and the bipartition defaults to
    ``({0}, rest)``.
    """

    balanced: bool
    bipartition: tuple[tuple[int, ...], tuple[int, ...]] | None
    vacuous: bool = False


def positive_cluster_partition(g: SignedDigraph) -> PositiveClusterPartition:
    """Unique partition of V into weakly connected components of the positive subgraph."""
    adj = g.undirected_adjacency(POSITIVE_ONLY)
    seen = [False] * g.n
    clusters: list[tuple[int, ...]] = []
    for start in range(g.n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = [start]
        while queue:
            v = queue.pop()
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        clusters.append(tuple(sorted(comp)))
    clusters.sort(key=lambda c: c[0])
    return PositiveClusterPartition(tuple(clusters))


def _negative_components(g: SignedDigraph) -> tuple[list[list[int]], list[int], bool]:
    """2-color the undirected negative graph.

    Returns (components as [side0_nodes + side1_nodes grouped], color per node
    with -1 for nodes untouched by negative arcs, bipartite flag).  Each
    component's coloring is anchored at its smallest node (color 0).
    """
    adj = g.undirected_adjacency(NEGATIVE_ONLY)
    color = [-1] * g.n
    comp_id = [-1] * g.n
    components: list[list[int]] = []
    bipartite = True
    for start in range(g.n):
        if color[start] != -1 or not adj[start]:
            continue
        cid = len(components)
        members = [start]
        color[start] = 0
        comp_id[start] = cid
        queue = [start]
        while queue:
            v = queue.pop()
            for w in adj[v]:
                if color[w] == -1:
                    color[w] = 1 - color[v]
                    comp_id[w] = cid
                    members.append(w)
                    queue.append(w)
                elif color[w] == color[v]:
                    bipartite = False
        components.append(sorted(members))
    return components, color, bipartite


def is_strongly_balanced(g: SignedDigraph) -> BalanceResult:
    """Test whether negative arcs admit a 2-partition with all of them crossing.

    The graph is strongly balanced when V splits into two nonempty sets with
    every negative arc running between them; positive arcs are unconstrained.
    Equivalently the undirected image of the negative subgraph must be
    bipartite.  When several bipartitions exist the one with node 0 in the
    first set and the lexicographically smallest first set is returned.
    """
    if g.negative_arc_count() == 0:
        rest = tuple(range(1, g.n))
        return BalanceResult(True, ((0,), rest), vacuous=True)

    components, color, bipartite = _negative_components(g)
    if not bipartite:
        return BalanceResult(False, None)

    def feasible(in_v1: set[int], out_v1: set[int], closed: bool) -> bool:
        # Each negative component must place its two color classes on
        # opposite sides of the partition.  With `closed`, V1 equals in_v1
        # exactly and every other node is excluded.
        for members in components:
            side1 = {color[v] for v in members if v in in_v1}
            side2 = {color[v] for v in members if (v in out_v1) or (closed and v not in in_v1)}
            if len(side1) > 1 or len(side2) > 1:
                return False
            if side1 and side2 and side1 == side2:
                return False
        return True

    # Greedy lexicographic minimisation of sorted(V1) with 0 in V1: at each
    # node prefer closing the set, then including the node, then excluding it.
    in_v1 = {0}
    out_v1: set[int] = set()
    for v in range(1, g.n):
        if feasible(in_v1, out_v1, closed=True):
            break
        if feasible(in_v1 | {v}, out_v1, closed=False):
            in_v1.add(v)
        else:
            out_v1.add(v)

    v1 = tuple(sorted(in_v1))
    v2 = tuple(v for v in range(g.n) if v not in in_v1)
    # With at least one negative component, V2 receives one side of each
    # component and is therefore nonempty.
    return BalanceResult(True, (v1, v2))


def _reachable(adj: Sequence[Sequence[int]], start: int) -> list[bool]:
    seen = [False] * len(adj)
    seen[start] = True
    queue = [start]
    while queue:
        v = queue.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return seen


def is_strongly_connected(g: SignedDigraph, selector: str = ALL) -> bool:
    """True iff every two nodes of the selected subgraph are mutually reachable."""
    adj = g.out_adjacency(selector)
    if not all(_reachable(adj, 0)):
        return False
    radj: list[list[int]] = [[] for _ in range(g.n)]
    for v, outs in enumerate(adj):
        for w in outs:
            radj[w].append(v)
    return all(_reachable(radj, 0))


def is_weakly_connected(g: SignedDigraph, selector: str = ALL) -> bool:
    """True iff the undirected image of the selected subgraph is connected."""
    return all(_reachable(g.undirected_adjacency(selector), 0))


def has_center_node(g: SignedDigraph, selector: str = ALL) -> int | None:
    """Smallest node from which every node is reachable, or None.

    A center node exists exactly when the selected subgraph has a spanning
    tree rooted at it.
    """
    adj = g.out_adjacency(selector)
    for v in range(g.n):
        if all(_reachable(adj, v)):
            return v
    return None


def has_spanning_tree(g: SignedDigraph, selector: str = ALL) -> bool:
    return has_center_node(g, selector) is not None


def union_graph(graphs: Sequence[SignedDigraph]) -> SignedDigraph:
    """Union of the arc sets; signs are preserved and must not conflict."""
    if not graphs:
        raise EmptyWindow("union over an empty list of graphs")
    n = graphs[0].n
    merged: dict[tuple[int, int], int] = {}
    for g in graphs:
        if g.n != n:
            raise GraphError(f"node count mismatch in union: {g.n} != {n}")
        for src, dst, sign in g.arcs():
            prev = merged.get((src, dst))
            if prev is not None and prev != sign:
                raise SignConflict(src, dst)
            merged[(src, dst)] = sign
    return SignedDigraph(n, ((s, d, g) for (s, d), g in merged.items()))


def restricted_has_spanning_tree(g: SignedDigraph, nodes: Sequence[int], selector: str = ALL) -> bool:
    """Spanning-tree test on the subgraph induced by ``nodes``."""
    node_set = set(nodes)
    adj: dict[int, list[int]] = {v: [] for v in node_set}
    for src, dst in g.arc_pairs(selector):
        if src in node_set and dst in node_set:
            adj[src].append(dst)
    for root in sorted(node_set):
        seen = {root}
        queue = [root]
        while queue:
            v = queue.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if seen == node_set:
            return True
    return False


# -- text format ------------------------------------------------------------
#
# One arc per line, `src dst sign` with sign in {+,-}; the first
# non-comment line is `n <count>`.  Lines starting with `#` are comments.

def parse_graph(text: str, name: str = "<string>") -> SignedDigraph:
    n: int | None = None
    arcs: list[tuple[int, int, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise GraphParseError(line_no, f"expected header 'n <count>', got {line!r}")
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphParseError(line_no, f"invalid node count {parts[1]!r}") from None
            continue
        if len(parts) != 3:
            raise GraphParseError(line_no, f"expected 'src dst sign', got {line!r}")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(line_no, f"invalid node id in {line!r}") from None
        if parts[2] == "+":
            sign = POSITIVE
        elif parts[2] == "-":
            sign = NEGATIVE
        else:
            raise GraphParseError(line_no, f"invalid sign {parts[2]!r} (expected + or -)")
        arcs.append((src, dst, sign))
    if n is None:
        raise GraphParseError(1, "missing 'n <count>' header")
    try:
        return SignedDigraph(n, arcs)
    except GraphError as exc:
        raise GraphParseError(1, f"{name}: {exc}") from exc


def load_graph(path) -> SignedDigraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read(), name=str(path))


def format_graph(g: SignedDigraph) -> str:
    lines = [f"n {g.n}"]
    for src, dst, sign in g.arcs():
        lines.append(f"{src} {dst} {'+' if sign == POSITIVE else '-'}")
    return "\n".join(lines) + "\n"


def save_graph(g: SignedDigraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_graph(g))


def random_signed_digraph(
    n: int,
    rng: np.random.Generator,
    arc_prob: float = 0.5,
    negative_frac: float = 0.3,
    require_strongly_connected: bool = False,
    require_both_signs: bool = False,
    max_tries: int = 1000,
) -> SignedDigraph:
    """Seeded random signed digraph, optionally rejection-sampled for structure."""
    for _ in range(max_tries):
        arcs = []
        for src in range(n):
            for dst in range(n):
                if src == dst:
                    continue
                if rng.random() < arc_prob:
                    sign = NEGATIVE if rng.random() < negative_frac else POSITIVE
                    arcs.append((src, dst, sign))
        g = SignedDigraph(n, arcs)
        if require_strongly_connected and not is_strongly_connected(g):
            continue
        if require_both_signs and (g.negative_arc_count() == 0 or g.positive_arc_count() == 0):
            continue
        return g
    raise GraphError("could not generate a graph meeting the constraints")
