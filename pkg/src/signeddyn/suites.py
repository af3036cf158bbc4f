"""Verification suites: canonical scenarios with pass/fail criteria.

Each suite binds a scenario to the structural assumptions its claim relies
on and to an empirical pass criterion.  Gates run first and raise
:class:`AssumptionViolated` when the scenario does not satisfy the claim's
hypotheses; that signals a miswritten scenario, not a failed claim.

Almost-sure statements are judged at desk scale: the predicate must hold on
at least 95% of seeds with the 95% Wilson lower bound above 0.85.
Pathwise (per-step) facts allow zero violations.  Suite ids:

  L1, L2, L5            per-step magnitude bounds (mirror-flip model)
  T1, T2i, T2ii         convergence / clustering (mirror-flip model)
  T3, P1                magnitude divergence and its no-survivor pattern
  T4i, T4ii             convergence vs gap divergence (repulsion model)
  T5                    weak consensus under rare negative attention
  T6, P2                gap divergence and its pairwise no-survivor pattern
  T7                    per-cluster consensus under decaying disruption
  L10                   per-step gap facts (repulsion model)
  ORACLE                sampled one-step mean vs exact expectation
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .dynamics import (
    RELATIVE_STATE_REVERSION,
    STATE_REVERSION,
    ModelConfig,
    StateVector,
    TrajectoryRecord,
    one_step_expectation_oracle,
    one_step_mc,
)
from .graphs import (
    NEGATIVE,
    POSITIVE,
    POSITIVE_ONLY,
    SignedDigraph,
    is_strongly_balanced,
    positive_cluster_partition,
    random_signed_digraph,
    restricted_has_spanning_tree,
    save_graph,
)
from .metrics import (
    DerivedConstants,
    detect_bipolar_clustering,
    detect_convergence,
    detect_no_survivor,
    wilson_interval,
    window_coefficients,
)
from .montecarlo import iter_runs
from .sampling import FULL, GOSSIP, PER_ARC, AttentionSchedule, InteractionPolicy
from .scenario import DetectorSettings, InitSpec, ScenarioConfig, dump_scenario
from .schedule import GraphSchedule, check_assumptions, total_graph

SUITE_IDS = (
    "T1", "T2i", "T2ii", "T3", "P1", "T4i", "T4ii", "T5", "T6", "P2", "T7",
    "L1", "L2", "L5", "L10", "ORACLE",
)

MIN_FRACTION = 0.95
MIN_WILSON_LOW = 0.85
STEP_TOL = 1e-12


class AssumptionViolated(RuntimeError):
    """A suite's scenario fails a hypothesis the claim needs."""

    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.name = name


@dataclass
class SuiteResult:
    suite_id: str
    passed: bool
    messages: tuple[str, ...]
    evidence: Mapping[str, object]
    scenario: ScenarioConfig | None

    def summary(self) -> str:
        return f"{self.suite_id}: {'PASS' if self.passed else 'FAIL'}"


# -- canonical graphs ---------------------------------------------------------

def reference_graph() -> SignedDigraph:
    """Seeded random strongly connected 6-node graph carrying both signs."""
    rng = np.random.default_rng(20240717)
    return random_signed_digraph(
        6, rng, arc_prob=0.5, negative_frac=0.3,
        require_strongly_connected=True, require_both_signs=True,
    )


def signed_cycles_graph() -> SignedDigraph:
    """3 nodes; positive and negative subgraphs are both directed cycles."""
    return SignedDigraph(3, [
        (0, 1, POSITIVE), (1, 2, POSITIVE), (2, 0, POSITIVE),
        (1, 0, NEGATIVE), (2, 1, NEGATIVE), (0, 2, NEGATIVE),
    ])


def mirrored_triangles_graph() -> SignedDigraph:
    """Two positive 3-cycles joined only by negative arcs: strongly balanced."""
    return SignedDigraph(6, [
        (0, 1, POSITIVE), (1, 2, POSITIVE), (2, 0, POSITIVE),
        (3, 4, POSITIVE), (4, 5, POSITIVE), (5, 3, POSITIVE),
        (2, 3, NEGATIVE), (5, 0, NEGATIVE),
    ])


def frustrated_triangle_graph() -> SignedDigraph:
    """A negative 3-cycle (odd, hence unbalanced) inside a positive ring."""
    return SignedDigraph(6, [
        (0, 1, NEGATIVE), (1, 2, NEGATIVE), (2, 0, NEGATIVE),
        (1, 0, POSITIVE), (2, 1, POSITIVE), (0, 2, POSITIVE),
        (2, 3, POSITIVE), (3, 4, POSITIVE), (4, 5, POSITIVE), (5, 2, POSITIVE),
    ])


def two_cluster_graph() -> SignedDigraph:
    """Two rooted positive clusters {0,1} and {2,3} with negative arcs between."""
    return SignedDigraph(4, [
        (0, 1, POSITIVE), (2, 3, POSITIVE),
        (0, 2, NEGATIVE), (2, 0, NEGATIVE),
    ])


def rooted_positive_graph() -> SignedDigraph:
    """All-positive 3-node graph with a spanning tree rooted at node 0."""
    return SignedDigraph(3, [(0, 1, POSITIVE), (0, 2, POSITIVE), (1, 2, POSITIVE)])


# -- scenario helpers ----------------------------------------------------------

def _constant(q: float, role: str) -> AttentionSchedule:
    return AttentionSchedule("constant", q=q, role=role)


def _scenario(graph, model, b, d, **kw) -> ScenarioConfig:
    att_neg = d if isinstance(d, AttentionSchedule) else _constant(d, "negative")
    defaults = dict(
        schedule=GraphSchedule.static(graph),
        policy=InteractionPolicy(PER_ARC, p=0.5),
        model=model,
        attention_positive=_constant(b, "positive"),
        attention_negative=att_neg,
        init=InitSpec("uniform", low=-1.0, high=1.0),
        record_stride=1,
        detect=DetectorSettings(max_abs_threshold=None, gap_threshold=None, window=500),
    )
    defaults.update(kw)
    return ScenarioConfig(**defaults)


def scenario_reference_contraction(num_runs=200, horizon=2000, seed=101) -> ScenarioConfig:
    """Mirror-flip model on the reference graph with alpha+beta below 1/(n-1)."""
    return _scenario(
        reference_graph(), ModelConfig(STATE_REVERSION, 0.08, 0.08), 0.5, 0.5,
        horizon=horizon, num_runs=num_runs, seed=seed,
    )


def scenario_magnitude_divergence(num_runs=100, horizon=2000, seed=303) -> ScenarioConfig:
    return _scenario(
        signed_cycles_graph(), ModelConfig(STATE_REVERSION, 0.1, 2000.0), 0.5, 0.5,
        horizon=horizon, num_runs=num_runs, seed=seed,
        detect=DetectorSettings(max_abs_threshold=1e8, gap_threshold=None, window=500),
    )


def scenario_cluster_convergence(num_runs=100, horizon=50_000, seed=606, **kw) -> ScenarioConfig:
    return _scenario(
        two_cluster_graph(), ModelConfig(RELATIVE_STATE_REVERSION, 0.2, 1.0), 0.5,
        AttentionSchedule("power_decay", c=1.0, gamma=2.0, role="negative"),
        horizon=horizon, num_runs=num_runs, seed=seed, **kw,
    )


def scenario_gap_divergence(num_runs=100, horizon=20_000, seed=909) -> ScenarioConfig:
    return _scenario(
        signed_cycles_graph(), ModelConfig(RELATIVE_STATE_REVERSION, 0.05, 1.0), 0.01, 0.5,
        horizon=horizon, num_runs=num_runs, seed=seed,
        detect=DetectorSettings(max_abs_threshold=None, gap_threshold=1e8, window=500),
    )


# -- gate helpers ---------------------------------------------------------------

def _require(condition: bool, name: str, message: str) -> None:
    if not condition:
        raise AssumptionViolated(name, message)


def _require_assumptions(scenario: ScenarioConfig, ids: Sequence[str], window: int = 1) -> None:
    report = check_assumptions(scenario.schedule, scenario.policy, window)
    for aid in ids:
        entry = report[aid]
        _require(entry.holds, aid, entry.witness or "assumption fails")


def _require_constant_attention(scenario: ScenarioConfig, open_unit: bool = True) -> None:
    for sched in (scenario.attention_positive, scenario.attention_negative):
        _require(sched.kind == "constant", "attention", f"{sched.role} attention must be constant")
        if open_unit:
            _require(0.0 < sched.q < 1.0, "attention", f"{sched.role} attention must lie in (0, 1)")


def _require_recurring_negative_arcs(scenario: ScenarioConfig) -> SignedDigraph:
    """Total graph must exist, contain a negative arc, and only recurring ones."""
    total = total_graph(scenario.schedule).graph
    _require(total.negative_arc_count() > 0, "negative-arcs", "total graph has no negative arc")
    recurring = set()
    for g in scenario.schedule.recurring_graphs():
        recurring.update(g.arc_pairs("negative"))
    missing = set(total.arc_pairs("negative")) - recurring
    _require(not missing, "negative-arcs", f"negative arcs {sorted(missing)} do not recur")
    return total


def _fraction_verdict(successes: int, total: int) -> tuple[bool, float, float]:
    frac = successes / total
    low, _ = wilson_interval(successes, total)
    return frac >= MIN_FRACTION and low > MIN_WILSON_LOW, frac, low


# -- suites ----------------------------------------------------------------------

def _suite_l1(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_reference_contraction()
    n = sc.schedule.n
    _require(sc.model.negative_model == STATE_REVERSION, "model", "needs the state-reversion model")
    _require(sc.model.alpha + sc.model.beta <= 1.0 / (n - 1) + 1e-15, "weights",
             f"alpha+beta must be <= 1/(n-1)={1.0/(n-1):.4f}")
    _require(sc.record_stride == 1, "recording", "per-step check needs stride 1")
    violations = 0
    worst = -np.inf
    steps = 0
    for traj in iter_runs(sc, use_fast):
        inc = traj.max_abs[1:] - traj.max_abs[:-1]
        violations += int(np.sum(inc > STEP_TOL))
        worst = max(worst, float(inc.max()))
        steps += len(inc)
    passed = violations == 0
    return SuiteResult(
        "L1", passed,
        (f"max magnitude never increased by more than {STEP_TOL:g} over {steps} steps"
         if passed else f"{violations} monotonicity violations",),
        {"runs": sc.num_runs, "steps": steps, "violations": violations, "worst_increment": worst},
        sc,
    )


def _suite_l2(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_reference_contraction(num_runs=20)
    n = sc.schedule.n
    _require(sc.model.negative_model == STATE_REVERSION, "model", "needs the state-reversion model")
    consts = DerivedConstants(n, 1, sc.model.alpha, sc.model.beta)
    _require(0.0 < consts.gamma_star < 1.0, "weights", "needs gamma_star in (0, 1)")
    _require(sc.record_stride == 1, "recording", "per-step check needs stride 1")
    anchors = (0, 7, 63, 200, 981)
    tol = 1e-9
    violations = 0
    checked = 0
    for traj in iter_runs(sc, use_fast):
        m_series = traj.max_abs
        for t in anchors:
            if t >= len(traj.slots) - 1 or m_series[t] <= 0.0:
                continue
            m_t = m_series[t]
            ks = np.arange(len(traj.slots) - t)
            decay = consts.gamma_star ** ks
            for i in range(n):
                zeta = abs(traj.states[t, i]) / m_t
                if not 0.0 < zeta < 1.0:
                    continue
                bound = (1.0 - (1.0 - zeta) * decay) * m_t + tol
                violations += int(np.sum(np.abs(traj.states[t:, i]) > bound))
                checked += 1
    passed = violations == 0 and checked > 0
    return SuiteResult(
        "L2", passed,
        (f"contraction envelope held for {checked} (node, anchor) pairs" if passed
         else f"{violations} envelope violations over {checked} pairs",),
        {"runs": sc.num_runs, "pairs": checked, "violations": violations,
         "gamma_star": consts.gamma_star},
        sc,
    )


def _suite_l5(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or _scenario(
        signed_cycles_graph(), ModelConfig(STATE_REVERSION, 0.1, 2000.0), 0.5, 0.5,
        horizon=200, num_runs=50, seed=404,
    )
    n = sc.schedule.n
    _require(sc.model.negative_model == STATE_REVERSION, "model", "needs the state-reversion model")
    _require(sc.model.alpha < 1.0 / (2 * n), "weights", f"alpha must be < 1/(2n)={1/(2*n):.4f}")
    _require(sc.model.beta > 16.0 * n ** (n + 1), "weights",
             f"beta must exceed 16*n^(n+1)={16 * n ** (n + 1):g}")
    _require(sc.record_stride == 1, "recording", "per-step check needs stride 1")
    floor = 1.0 / (2 * n)
    violations = 0
    worst = np.inf
    steps = 0
    for traj in iter_runs(sc, use_fast):
        prev = traj.max_abs[:-1]
        nxt = traj.max_abs[1:]
        violations += int(np.sum(nxt < prev * floor - STEP_TOL))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(prev > 0, nxt / prev, np.inf)
        worst = min(worst, float(ratios.min()))
        steps += len(nxt)
    passed = violations == 0
    return SuiteResult(
        "L5", passed,
        (f"magnitude never dropped below 1/{2*n} of its previous value "
         f"(worst ratio {worst:.4f}) over {steps} pre-overflow steps"
         if passed else f"{violations} floor violations",),
        {"runs": sc.num_runs, "steps": steps, "violations": violations, "worst_ratio": worst},
        sc,
    )


def _suite_t1(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_reference_contraction(num_runs=100, horizon=50_000, seed=202)
    n = sc.schedule.n
    _require_assumptions(sc, ("A1", "A2"))
    _require(sc.model.negative_model == STATE_REVERSION, "model", "needs the state-reversion model")
    _require(sc.model.alpha + sc.model.beta <= 1.0 / (n - 1) + 1e-15, "weights",
             "alpha+beta must be <= 1/(n-1)")
    _require_constant_attention(sc)
    total = total_graph(sc.schedule).graph
    _require(total.negative_arc_count() > 0 and total.positive_arc_count() > 0,
             "signs", "graph must carry both signs")
    window = sc.detect.window or max(100, sc.horizon // 100)
    successes = 0
    for traj in iter_runs(sc, use_fast):
        if detect_convergence(traj, window, sc.detect.eps) is not None:
            successes += 1
    passed, frac, low = _fraction_verdict(successes, sc.num_runs)
    return SuiteResult(
        "T1", passed,
        (f"{successes}/{sc.num_runs} runs converged (fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "converged": successes, "fraction": frac, "wilson_low": low},
        sc,
    )


def _gate_t2(sc: ScenarioConfig) -> SignedDigraph:
    _require_assumptions(sc, ("A1", "A2", "A3"))
    _require(sc.model.negative_model == STATE_REVERSION, "model", "needs the state-reversion model")
    _require(sc.model.alpha + sc.model.beta <= 1.0 / (sc.schedule.n - 1) + 1e-15, "weights",
             "alpha+beta must be <= 1/(n-1)")
    _require_constant_attention(sc)
    return _require_recurring_negative_arcs(sc)


def _suite_t2i(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or _scenario(
        mirrored_triangles_graph(), ModelConfig(STATE_REVERSION, 0.08, 0.08), 0.5, 0.5,
        horizon=50_000, num_runs=100, seed=505,
    )
    total = _gate_t2(sc)
    balance = is_strongly_balanced(total)
    _require(balance.balanced and not balance.vacuous, "balance",
             "total graph must be strongly balanced with a negative arc")
    partition = balance.bipartition
    window = sc.detect.window or max(100, sc.horizon // 100)
    converged = 0
    bipolar = 0
    y_values = []
    for traj in iter_runs(sc, use_fast):
        limits = detect_convergence(traj, window, sc.detect.eps)
        if limits is None:
            continue
        converged += 1
        res = detect_bipolar_clustering(
            limits, partition, sc.detect.cluster_eps,
            initial_l1=float(np.sum(np.abs(traj.initial_state))),
        )
        if res.match:
            bipolar += 1
            y_values.append(res.y_star)
    _require(converged > 0, "convergence", "no run converged; clustering check is vacuous")
    passed, frac, low = _fraction_verdict(bipolar, converged)
    return SuiteResult(
        "T2i", passed,
        (f"{bipolar}/{converged} converged runs show the mirror pattern across "
         f"{partition} (fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "converged": converged, "bipolar": bipolar,
         "fraction": frac, "wilson_low": low, "partition": partition,
         "mean_abs_limit": float(np.mean(np.abs(y_values))) if y_values else 0.0},
        sc,
    )


def _suite_t2ii(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or _scenario(
        frustrated_triangle_graph(), ModelConfig(STATE_REVERSION, 0.08, 0.08), 0.5, 0.5,
        horizon=50_000, num_runs=100, seed=707,
    )
    total = _gate_t2(sc)
    _require(not is_strongly_balanced(total).balanced, "balance",
             "total graph must NOT be strongly balanced")
    window = sc.detect.window or max(100, sc.horizon // 100)
    zeroed = 0
    for traj in iter_runs(sc, use_fast):
        limits = detect_convergence(traj, window, sc.detect.eps)
        if limits is not None and float(np.max(np.abs(limits))) < sc.detect.zero_eps:
            zeroed += 1
    passed, frac, low = _fraction_verdict(zeroed, sc.num_runs)
    return SuiteResult(
        "T2ii", passed,
        (f"{zeroed}/{sc.num_runs} runs converged to zero within {sc.detect.zero_eps:g} "
         f"(fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "all_zero": zeroed, "fraction": frac, "wilson_low": low},
        sc,
    )


def _suite_t3(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_magnitude_divergence()
    n = sc.schedule.n
    _require_assumptions(sc, ("A1", "A4", "A5", "A6"))
    _require(sc.model.negative_model == STATE_REVERSION, "model", "needs the state-reversion model")
    _require(sc.model.alpha <= 1.0 / (2 * n), "weights", "alpha must be <= 1/(2n)")
    _require_constant_attention(sc)
    _require(sc.detect.max_abs_threshold is not None, "detect", "needs a magnitude threshold")
    crossed = 0
    for traj in iter_runs(sc, use_fast):
        if traj.first_max_abs_cross is not None:
            crossed += 1
    passed, frac, low = _fraction_verdict(crossed, sc.num_runs)
    return SuiteResult(
        "T3", passed,
        (f"{crossed}/{sc.num_runs} runs crossed max-magnitude {sc.detect.max_abs_threshold:g} "
         f"(fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "crossed": crossed, "fraction": frac, "wilson_low": low},
        sc,
    )


def _suite_p1(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_magnitude_divergence()
    _require_assumptions(sc, ("A1", "A2", "A6"))
    _require_constant_attention(sc)
    _require(sc.record_stride == 1, "recording", "per-node crossings need stride 1")
    threshold = 1e6
    crossing_runs = 0
    no_survivor_runs = 0
    for traj in iter_runs(sc, use_fast):
        if traj.first_max_abs_cross is None:
            continue
        crossing_runs += 1
        if detect_no_survivor(traj, threshold, "per_node").all_crossed:
            no_survivor_runs += 1
    _require(crossing_runs > 0, "divergence", "no run diverged; no-survivor check is vacuous")
    passed = no_survivor_runs == crossing_runs
    return SuiteResult(
        "P1", passed,
        (f"every node crossed |s|>= {threshold:g} in {no_survivor_runs}/{crossing_runs} "
         "diverging runs",),
        {"diverging_runs": crossing_runs, "no_survivor_runs": no_survivor_runs,
         "threshold": threshold},
        sc,
    )


def _gate_t4(sc: ScenarioConfig) -> None:
    _require(sc.schedule.kind == "static", "schedule", "needs a frozen environment")
    _require(sc.model.negative_model == RELATIVE_STATE_REVERSION, "model",
             "needs the relative-state-reversion model")
    n = sc.schedule.n
    _require(0.0 < sc.model.alpha < 1.0 / (n - 1), "weights", "alpha must lie in (0, 1/(n-1))")
    _require_assumptions(sc, ("A1",))
    g = sc.schedule.graphs[0]
    partition = positive_cluster_partition(g)
    for cluster in partition.clusters:
        _require(
            restricted_has_spanning_tree(g, cluster, POSITIVE_ONLY),
            "cluster-tree", f"positive cluster {cluster} has no spanning tree",
        )


def _suite_t4i(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_cluster_convergence()
    _gate_t4(sc)
    _require(sc.attention_negative.summable() is True, "attention",
             "negative attention must be summable")
    window = sc.detect.window or max(100, sc.horizon // 100)
    successes = 0
    for traj in iter_runs(sc, use_fast):
        if detect_convergence(traj, window, sc.detect.eps) is not None:
            successes += 1
    passed, frac, low = _fraction_verdict(successes, sc.num_runs)
    return SuiteResult(
        "T4i", passed,
        (f"{successes}/{sc.num_runs} runs converged under summable negative attention "
         f"(fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "converged": successes, "fraction": frac, "wilson_low": low},
        sc,
    )


def _suite_t4ii(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or _scenario(
        two_cluster_graph(), ModelConfig(RELATIVE_STATE_REVERSION, 0.2, 1.0), 0.5, 0.1,
        init=InitSpec("cluster_levels", values=(1.0, 2.0)),
        horizon=10_000, num_runs=100, seed=808, early_stop=True,
        detect=DetectorSettings(max_abs_threshold=None, gap_threshold=1e6, window=500),
    )
    _gate_t4(sc)
    _require(sc.attention_negative.summable() is False, "attention",
             "negative attention must NOT be summable")
    partition = positive_cluster_partition(total_graph(sc.schedule).graph)
    _require(partition.count >= 2, "clusters", "needs at least two positive clusters")
    _require(sc.detect.gap_threshold is not None, "detect", "needs a gap threshold")
    crossed = 0
    for traj in iter_runs(sc, use_fast):
        if traj.first_gap_cross is not None:
            crossed += 1
    passed, frac, low = _fraction_verdict(crossed, sc.num_runs)
    return SuiteResult(
        "T4ii", passed,
        (f"{crossed}/{sc.num_runs} runs crossed gap {sc.detect.gap_threshold:g} "
         f"from cluster-separated starts (fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "crossed": crossed, "fraction": frac, "wilson_low": low},
        sc,
    )


def t5_feasibility_search(
    n: int = 3,
    window: int = 1,
    alpha: float = 0.2,
    p_star: float = 0.5,
    b_grid: Sequence[float] = (0.5, 0.7, 0.8, 0.9, 0.95),
    d_grid: Sequence[float] = (1e-6, 1e-5, 1e-4, 1e-3),
    beta_grid: Sequence[float] = (0.01, 0.05, 0.1, 0.2),
) -> tuple[float, float, float, float] | None:
    """Search constant (b, d, beta) for a positive per-window margin x - y.

    With constant attention the coefficients do not depend on the window
    index, so a positive margin in [0, 1] makes the window margins sum to
    infinity.  Returns (b, d, beta, margin) maximising the margin, or None
    when the grid holds no feasible point.
    """
    best = None
    for b in b_grid:
        for d in d_grid:
            for beta in beta_grid:
                wc = window_coefficients(
                    n, window, alpha, beta, p_star,
                    _constant(b, "positive"), _constant(d, "negative"), 0,
                )
                margin = wc.x - wc.y
                if 0.0 < margin <= 1.0 and (best is None or margin > best[3]):
                    best = (b, d, beta, margin)
    return best


def _suite_t5(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    found = t5_feasibility_search()
    _require(found is not None, "feasibility",
             "no (b, d, beta) grid point satisfies the window-margin hypothesis")
    b, d, beta, margin = found
    sc = scenario or _scenario(
        rooted_positive_graph(), ModelConfig(RELATIVE_STATE_REVERSION, 0.2, beta), b, d,
        horizon=10**6, num_runs=100, seed=111, early_stop=True, record_stride=1000,
        detect=DetectorSettings(max_abs_threshold=None, gap_threshold=None,
                                gap_floor=1e-4, window=500),
    )
    n = sc.schedule.n
    _require_assumptions(sc, ("A1", "A7"))
    _require(sc.model.negative_model == RELATIVE_STATE_REVERSION, "model",
             "needs the relative-state-reversion model")
    _require(0.0 < sc.model.alpha < 1.0 / (n - 1), "weights", "alpha must lie in (0, 1/(n-1))")
    lo, _ = sc.policy.prob_range(sc.schedule.graphs)
    wc = window_coefficients(n, 1, sc.model.alpha, sc.model.beta, lo,
                             sc.attention_positive, sc.attention_negative, 0)
    _require(0.0 < wc.x - wc.y <= 1.0, "window-margin",
             f"x - y = {wc.x - wc.y:g} outside (0, 1]")
    _require(sc.detect.gap_floor is not None, "detect", "needs a gap floor")
    reached = 0
    for traj in iter_runs(sc, use_fast):
        if traj.first_gap_floor is not None:
            reached += 1
    passed, frac, low = _fraction_verdict(reached, sc.num_runs)
    return SuiteResult(
        "T5", passed,
        (f"selected b={b}, d={d}, beta={beta} (window margin {margin:.2e}); "
         f"{reached}/{sc.num_runs} runs reached gap < {sc.detect.gap_floor:g} "
         f"(fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "reached": reached, "fraction": frac, "wilson_low": low,
         "b": b, "d": d, "beta": beta, "window_margin": margin},
        sc,
    )


def _suite_t6(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_gap_divergence()
    n = sc.schedule.n
    _require_assumptions(sc, ("A1", "A6", "A8"))
    _require(sc.model.negative_model == RELATIVE_STATE_REVERSION, "model",
             "needs the relative-state-reversion model")
    _require(0.0 <= sc.model.alpha < 1.0 / (2 * (n - 1)), "weights",
             "alpha must lie in [0, 1/(2(n-1)))")
    _require_constant_attention(sc)
    _require(sc.detect.gap_threshold is not None, "detect", "needs a gap threshold")
    crossed = 0
    for traj in iter_runs(sc, use_fast):
        if traj.first_gap_cross is not None:
            crossed += 1
    passed, frac, low = _fraction_verdict(crossed, sc.num_runs)
    return SuiteResult(
        "T6", passed,
        (f"{crossed}/{sc.num_runs} runs crossed gap {sc.detect.gap_threshold:g} "
         f"(fraction {frac:.3f}, Wilson low {low:.3f})",),
        {"runs": sc.num_runs, "crossed": crossed, "fraction": frac, "wilson_low": low},
        sc,
    )


def _suite_p2(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_gap_divergence()
    _require_assumptions(sc, ("A1", "A4", "A6"))
    _require_constant_attention(sc)
    _require(sc.record_stride == 1, "recording", "pairwise crossings need stride 1")
    threshold = 1e6
    crossing_runs = 0
    no_survivor_runs = 0
    for traj in iter_runs(sc, use_fast):
        if traj.first_gap_cross is None:
            continue
        crossing_runs += 1
        if detect_no_survivor(traj, threshold, "per_pair").all_crossed:
            no_survivor_runs += 1
    _require(crossing_runs > 0, "divergence", "no run diverged; no-survivor check is vacuous")
    passed = no_survivor_runs == crossing_runs
    return SuiteResult(
        "P2", passed,
        (f"every node pair's gap crossed {threshold:g} in {no_survivor_runs}/{crossing_runs} "
         "diverging runs",),
        {"diverging_runs": crossing_runs, "no_survivor_runs": no_survivor_runs,
         "threshold": threshold},
        sc,
    )


def _suite_t7(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_cluster_convergence(seed=1212)
    _require_assumptions(sc, ("A1", "A3", "A9"))
    _require(sc.model.negative_model == RELATIVE_STATE_REVERSION, "model",
             "needs the relative-state-reversion model")
    n = sc.schedule.n
    _require(0.0 < sc.model.alpha < 1.0 / (n - 1), "weights", "alpha must lie in (0, 1/(n-1))")
    _require(sc.attention_negative.summable() is True, "attention",
             "negative attention must be summable")
    _require(
        sc.attention_positive.kind == "constant" and sc.attention_positive.q > 0.0,
        "attention",
        "positive attention must be a positive constant so window products do not vanish",
    )
    partition = positive_cluster_partition(total_graph(sc.schedule).graph)
    eps = sc.detect.cluster_eps
    tight = 0
    separations = []
    for traj in iter_runs(sc, use_fast):
        final = traj.final_state
        spreads = [
            float(np.max(final[list(cluster)]) - np.min(final[list(cluster)]))
            for cluster in partition.clusters
        ]
        if max(spreads) < eps:
            tight += 1
        means = [float(np.mean(final[list(cluster)])) for cluster in partition.clusters]
        separations.append(max(means) - min(means))
    passed, frac, low = _fraction_verdict(tight, sc.num_runs)
    return SuiteResult(
        "T7", passed,
        (f"{tight}/{sc.num_runs} runs ended with within-cluster spread < {eps:g} "
         f"(fraction {frac:.3f}, Wilson low {low:.3f}); median between-cluster "
         f"separation {float(np.median(separations)):.3f}",),
        {"runs": sc.num_runs, "tight": tight, "fraction": frac, "wilson_low": low,
         "clusters": partition.clusters,
         "median_separation": float(np.median(separations))},
        sc,
    )


def _suite_l10(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    sc = scenario or scenario_cluster_convergence(record_attention=True)
    n = sc.schedule.n
    _require(sc.model.negative_model == RELATIVE_STATE_REVERSION, "model",
             "needs the relative-state-reversion model")
    _require(sc.model.alpha <= 1.0 / (n - 1) + 1e-15, "weights", "alpha must be <= 1/(n-1)")
    _require(sc.record_attention and sc.record_stride == 1, "recording",
             "per-step facts need stride 1 and recorded attention coins")
    growth = 1.0 + 2.0 * sc.model.beta * (n - 1)
    violations = 0
    steps = 0
    for traj in iter_runs(sc, use_fast):
        _, coins_d = traj.attention
        quiet = coins_d == 0
        top, bottom, gap = traj.state_max, traj.state_min, traj.gap
        violations += int(np.sum(top[1:][quiet] > top[:-1][quiet] + STEP_TOL))
        violations += int(np.sum(bottom[1:][quiet] < bottom[:-1][quiet] - STEP_TOL))
        violations += int(np.sum(gap[1:][quiet] > gap[:-1][quiet] + STEP_TOL))
        violations += int(np.sum(gap[1:] > growth * gap[:-1] + STEP_TOL))
        steps += len(gap) - 1
    passed = violations == 0
    return SuiteResult(
        "L10", passed,
        (f"monotone-on-quiet-slots and bounded-growth facts held over {steps} steps"
         if passed else f"{violations} per-step violations",),
        {"runs": sc.num_runs, "steps": steps, "violations": violations,
         "growth_factor": growth},
        sc,
    )


def _suite_oracle(scenario: ScenarioConfig | None, use_fast) -> SuiteResult:
    del scenario  # fixture-driven; no scenario override
    g = SignedDigraph(3, [(0, 1, POSITIVE), (2, 0, POSITIVE), (1, 2, NEGATIVE)])
    s0 = np.array([1.0, -2.0, 3.0])
    b, d = 0.6, 0.3
    n_draws = 200_000
    failures = []
    checked = 0
    for model_kind in (STATE_REVERSION, RELATIVE_STATE_REVERSION):
        cfg = ModelConfig(model_kind, alpha=0.25, beta=0.5)
        for policy_kind in (PER_ARC, GOSSIP, FULL):
            policy = InteractionPolicy(policy_kind, p=0.5)
            exact = one_step_expectation_oracle(StateVector(0, s0), g, policy, b, d, cfg)
            mean, se = one_step_mc(g, policy, s0, b, d, cfg, n_draws, seed=1717,
                                   use_fast=use_fast)
            margin = 4.0 * se + 1e-12 * (1.0 + np.abs(exact))
            checked += 1
            if not np.all(np.abs(mean - exact) <= margin):
                failures.append(f"{model_kind}/{policy_kind}: |mc-exact|={np.abs(mean-exact)}")
    passed = not failures
    return SuiteResult(
        "ORACLE", passed,
        (f"sampled one-step means matched exact expectations within 4 standard errors "
         f"on {checked} fixtures ({n_draws} draws each)" if passed else "; ".join(failures),),
        {"fixtures": checked, "draws": n_draws, "failures": tuple(failures)},
        None,
    )


_SUITES: dict[str, Callable] = {
    "L1": _suite_l1,
    "L2": _suite_l2,
    "L5": _suite_l5,
    "T1": _suite_t1,
    "T2i": _suite_t2i,
    "T2ii": _suite_t2ii,
    "T3": _suite_t3,
    "P1": _suite_p1,
    "T4i": _suite_t4i,
    "T4ii": _suite_t4ii,
    "T5": _suite_t5,
    "T6": _suite_t6,
    "P2": _suite_p2,
    "T7": _suite_t7,
    "L10": _suite_l10,
    "ORACLE": _suite_oracle,
}


def run_suite(
    suite_id: str,
    scenario: ScenarioConfig | None = None,
    out_dir: str | Path | None = None,
    use_fast: bool | None = None,
) -> SuiteResult:
    """Gate and execute one suite; optionally write its evidence bundle.

    ``scenario`` overrides the canonical scenario but still passes through
    the suite's assumption gate.
    """
    if suite_id not in _SUITES:
        raise KeyError(f"unknown suite {suite_id!r}; choose from {', '.join(SUITE_IDS)}")
    result = _SUITES[suite_id](scenario, use_fast)
    if out_dir is not None:
        write_evidence(result, out_dir)
    return result


def write_evidence(result: SuiteResult, out_dir: str | Path) -> Path:
    """Write a re-runnable bundle: scenario file, graphs, and the verdict."""
    out = Path(out_dir) / result.suite_id
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        f"suite = {result.suite_id}",
        f"passed = {str(result.passed).lower()}",
    ]
    for key, value in result.evidence.items():
        lines.append(f"{key} = {value}")
    lines.extend(f"note = {m}" for m in result.messages)
    (out / "result.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if result.scenario is not None:
        refs = tuple(f"graph{i}.sg" for i in range(len(result.scenario.schedule.graphs)))
        for name, g in zip(refs, result.scenario.schedule.graphs):
            save_graph(g, out / name)
        (out / "scenario.ini").write_text(dump_scenario(result.scenario, refs), encoding="utf-8")
    return out
