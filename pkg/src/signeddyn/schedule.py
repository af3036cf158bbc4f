"""Deterministic time-varying environment and assumption checking.

The environment is a deterministic sequence of signed graphs; randomness
only enters through interaction sampling and attention coins.  Schedules
come in three kinds: a single static graph, a periodic rotation, and a
scripted map from slots to graphs with a default.

``check_assumptions`` validates the structural and probabilistic hypotheses
A1..A9 that the verification suites gate on:

  A1  every present arc is sampled with probability bounded away from 0
  A2  K-slot unions of the full graph are strongly connected
  A3  the schedule is sign consistent (a total graph exists)
  A4  K-slot unions of the positive subgraph are strongly connected
  A5  K-slot unions of the negative subgraph are strongly connected
  A6  arc activations are independent with probability bounded away from 1
  A7  K-slot unions of the positive subgraph have a spanning tree
  A8  K-slot unions of the negative subgraph are weakly connected
  A9  K-slot positive unions restricted to each positive cluster of the
      total graph have a spanning tree

Checks quantified over all t are exact for static and periodic schedules
(finitely many distinct windows) and horizon-limited for scripted ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .graphs import (
    ALL,
    NEGATIVE_ONLY,
    POSITIVE,
    POSITIVE_ONLY,
    GraphError,
    SignConflict,
    SignedDigraph,
    has_spanning_tree,
    is_strongly_connected,
    is_weakly_connected,
    positive_cluster_partition,
    restricted_has_spanning_tree,
    union_graph,
)
from .sampling import GOSSIP, PER_ARC, InteractionPolicy

STATIC = "static"
PERIODIC = "periodic"
SCRIPTED = "scripted"

HOLDS = "holds"
FAILS = "fails"
NOT_APPLICABLE = "not_applicable"

ASSUMPTION_IDS = tuple(f"A{i}" for i in range(1, 10))


class ScheduleError(GraphError):
    """Invalid schedule construction or query."""


class GraphSchedule:
    """Deterministic sequence of signed graphs, one per time slot."""

    __slots__ = ("kind", "graphs", "script", "n")

    def __init__(
        self,
        kind: str,
        graphs: Sequence[SignedDigraph],
        script: Mapping[int, int] | None = None,
    ):
        if kind not in (STATIC, PERIODIC, SCRIPTED):
            raise ScheduleError(f"unknown schedule kind {kind!r}")
        if not graphs:
            raise ScheduleError("schedule needs at least one graph")
        self.kind = kind
        self.graphs = tuple(graphs)
        self.n = self.graphs[0].n
        for g in self.graphs:
            if g.n != self.n:
                raise ScheduleError(f"all graphs must share n={self.n}, got {g.n}")
        if kind == SCRIPTED:
            script = dict(script or {})
            for t, idx in script.items():
                if t < 0:
                    raise ScheduleError(f"script slot {t} must be >= 0")
                if not (0 <= idx < len(self.graphs)):
                    raise ScheduleError(f"script references unknown graph index {idx}")
            self.script = script
        else:
            if script:
                raise ScheduleError("script only valid for scripted schedules")
            self.script = None
        if kind == STATIC and len(self.graphs) != 1:
            raise ScheduleError("static schedule takes exactly one graph")

    @classmethod
    def static(cls, g: SignedDigraph) -> "GraphSchedule":
        return cls(STATIC, [g])

    @classmethod
    def periodic(cls, graphs: Sequence[SignedDigraph]) -> "GraphSchedule":
        return cls(PERIODIC, graphs)

    @classmethod
    def scripted(
        cls, script: Mapping[int, SignedDigraph], default: SignedDigraph
    ) -> "GraphSchedule":
        graphs: list[SignedDigraph] = [default]
        index: dict[int, int] = {}
        for t, g in sorted(script.items()):
            try:
                idx = graphs.index(g)
            except ValueError:
                graphs.append(g)
                idx = len(graphs) - 1
            index[t] = idx
        return cls(SCRIPTED, graphs, index)

    @property
    def period(self) -> int:
        return len(self.graphs) if self.kind == PERIODIC else 1

    def graph_index_at(self, t: int) -> int:
        if t < 0:
            raise ScheduleError(f"time index must be >= 0, got {t}")
        if self.kind == STATIC:
            return 0
        if self.kind == PERIODIC:
            return t % len(self.graphs)
        return self.script.get(t, 0)

    def graph_at(self, t: int) -> SignedDigraph:
        return self.graphs[self.graph_index_at(t)]

    def max_arc_count(self) -> int:
        return max(g.arc_count for g in self.graphs)

    def full_span(self) -> int:
        """Smallest horizon after which no new arc set can appear."""
        if self.kind == STATIC:
            return 1
        if self.kind == PERIODIC:
            return len(self.graphs)
        return (max(self.script) + 2) if self.script else 1

    def recurring_graphs(self) -> tuple[SignedDigraph, ...]:
        """Graphs that appear at infinitely many slots."""
        if self.kind == SCRIPTED:
            return (self.graphs[0],)
        return self.graphs

    def __repr__(self) -> str:
        return f"GraphSchedule(kind={self.kind!r}, n={self.n}, graphs={len(self.graphs)})"


def is_sign_consistent(
    sched: GraphSchedule, horizon: int | None = None
) -> tuple[bool, tuple[int, int] | None]:
    """True when no ordered pair carries both signs across the horizon."""
    horizon = sched.full_span() if horizon is None else horizon
    if horizon < 1:
        raise ScheduleError(f"horizon must be >= 1, got {horizon}")
    signs: dict[tuple[int, int], int] = {}
    for t in range(min(horizon, sched.full_span())):
        g = sched.graph_at(t)
        for src, dst, sign in g.arcs():
            prev = signs.get((src, dst))
            if prev is not None and prev != sign:
                return False, (src, dst)
            signs[(src, dst)] = sign
    return True, None


@dataclass(frozen=True)
class TotalGraphResult:
    graph: SignedDigraph
    exact: bool  # False when truncated at the horizon for a scripted schedule


def total_graph(sched: GraphSchedule, horizon: int | None = None) -> TotalGraphResult:
    """Union of the environment arc sets over ``[0, horizon)``.

    Raises :class:`SignConflict` when the schedule is not sign consistent
    over the horizon.  Exact for static and periodic schedules whenever the
    horizon reaches the full span.
    """
    span = sched.full_span()
    horizon = span if horizon is None else horizon
    if horizon < 1:
        raise ScheduleError(f"horizon must be >= 1, got {horizon}")
    window = [sched.graph_at(t) for t in range(min(horizon, span))]
    return TotalGraphResult(union_graph(window), exact=horizon >= span)


@dataclass(frozen=True)
class AssumptionStatus:
    status: str
    witness: str | None = None

    @property
    def holds(self) -> bool:
        return self.status == HOLDS


@dataclass(frozen=True)
class AssumptionReport:
    """Status per assumption, plus the window length and horizon used."""

    entries: Mapping[str, AssumptionStatus]
    window: int
    horizon: int
    exact: bool  # False when the schedule is scripted (horizon-limited scan)

    def __getitem__(self, key: str) -> AssumptionStatus:
        return self.entries[key]

    def holds(self, *ids: str) -> bool:
        return all(self.entries[i].holds for i in ids)

    def failing(self) -> list[str]:
        return [i for i in ASSUMPTION_IDS if self.entries[i].status == FAILS]


def _window_union(graphs: Sequence[SignedDigraph], selector: str) -> SignedDigraph:
    """Union of the selected arc pairs, as an unsigned connectivity graph.

    Working with bare pairs keeps connectivity checks meaningful even for
    sign-inconsistent schedules (a conflicting arc is simply present).
    """
    pairs: set[tuple[int, int]] = set()
    for g in graphs:
        pairs.update(g.arc_pairs(selector))
    return SignedDigraph(graphs[0].n, ((s, d, POSITIVE) for s, d in pairs))


def _windowed_check(sched: GraphSchedule, window: int, horizon: int, selector: str, predicate) -> str | None:
    """Run ``predicate`` on every K-slot window union; return a witness or None.

    Window contents repeat for static/periodic schedules, so results are
    memoised on the tuple of graph indices in the window.
    """
    cache: dict[tuple[int, ...], bool] = {}
    for t in range(0, horizon - window + 1):
        key = tuple(sched.graph_index_at(tau) for tau in range(t, t + window))
        ok = cache.get(key)
        if ok is None:
            ok = predicate(_window_union([sched.graphs[i] for i in key], selector))
            cache[key] = ok
        if not ok:
            return f"window [{t}, {t + window - 1}] fails (K={window})"
    return None


def check_assumptions(
    sched: GraphSchedule,
    policy: InteractionPolicy | None,
    window: int,
    horizon: int | None = None,
    partition=None,
) -> AssumptionReport:
    """Evaluate A1..A9 for a schedule and interaction policy.

    ``window`` is the union length K; ``horizon`` bounds the scan (defaults
    to one full span plus a window, which is exact for static and periodic
    schedules).  ``partition`` optionally overrides the positive-cluster
    partition of the total graph used by A9.
    """
    if window < 1:
        raise ScheduleError(f"window must be >= 1, got {window}")
    if horizon is None:
        horizon = sched.full_span() + window
    if horizon < window:
        raise ScheduleError(f"horizon {horizon} shorter than window {window}")

    entries: dict[str, AssumptionStatus] = {}

    # A1/A6 are structural properties of the interaction policy.
    if policy is None:
        entries["A1"] = AssumptionStatus(NOT_APPLICABLE, "no interaction policy supplied")
        entries["A6"] = AssumptionStatus(NOT_APPLICABLE, "no interaction policy supplied")
    else:
        lo, hi = policy.prob_range(sched.graphs)
        if policy.kind == GOSSIP:
            m = sched.max_arc_count()
            entries["A1"] = (
                AssumptionStatus(HOLDS, f"every arc drawn with probability >= 1/{m}")
                if m
                else AssumptionStatus(FAILS, "no arcs to gossip over")
            )
            entries["A6"] = AssumptionStatus(FAILS, "gossip arcs are mutually exclusive, not independent")
        else:
            entries["A1"] = (
                AssumptionStatus(HOLDS, f"min per-arc probability {lo}")
                if lo > 0.0
                else AssumptionStatus(FAILS, "some arc has activation probability 0")
            )
            if policy.kind != PER_ARC:
                entries["A6"] = AssumptionStatus(FAILS, "activation probability 1 admits no upper bound below 1")
            elif hi < 1.0:
                entries["A6"] = AssumptionStatus(HOLDS, f"independent arcs, max probability {hi}")
            else:
                entries["A6"] = AssumptionStatus(FAILS, "some arc has activation probability 1")

    consistent, conflict = is_sign_consistent(sched, horizon)
    entries["A3"] = (
        AssumptionStatus(HOLDS, "total graph well defined")
        if consistent
        else AssumptionStatus(FAILS, f"arc {conflict} carries both signs")
    )

    connectivity = {
        "A2": (ALL, is_strongly_connected),
        "A4": (POSITIVE_ONLY, is_strongly_connected),
        "A5": (NEGATIVE_ONLY, is_strongly_connected),
        "A7": (POSITIVE_ONLY, has_spanning_tree),
        "A8": (NEGATIVE_ONLY, is_weakly_connected),
    }
    for aid, (selector, pred) in connectivity.items():
        witness = _windowed_check(sched, window, horizon, selector, pred)
        entries[aid] = AssumptionStatus(HOLDS) if witness is None else AssumptionStatus(FAILS, witness)

    if partition is None and consistent:
        partition = positive_cluster_partition(total_graph(sched, horizon).graph)
    if partition is None:
        entries["A9"] = AssumptionStatus(
            NOT_APPLICABLE, "sign-inconsistent schedule and no explicit cluster partition"
        )
    else:
        witness = _windowed_check(
            sched,
            window,
            horizon,
            POSITIVE_ONLY,
            lambda g: all(
                restricted_has_spanning_tree(g, cluster) for cluster in partition.clusters
            ),
        )
        entries["A9"] = AssumptionStatus(HOLDS) if witness is None else AssumptionStatus(FAILS, witness)

    ordered = {aid: entries[aid] for aid in ASSUMPTION_IDS}
    return AssumptionReport(ordered, window, horizon, exact=sched.kind != SCRIPTED)
