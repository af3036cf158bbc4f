"""The node update law and trajectory execution.

Every node holds a real-valued state.  At each slot the sampled in-neighbors
contribute a positive recommendation (standard consensus attraction) and a
negative recommendation under one of two models:

* ``state_reversion``           - antagonists report sign-flipped states,
                                  contributing ``-(s_i + s_j)`` per neighbor;
* ``relative_state_reversion``  - known antagonists repel, contributing
                                  ``+(s_i - s_j)`` per neighbor.

All nodes update synchronously: ``s_i(t+1) = s_i(t) + alpha*B_t*h_i_pos +
beta*D_t*h_i_neg`` with network-global attention coins ``B_t`` and ``D_t``.
Summing over an empty neighbor set yields a zero recommendation.

``run`` executes a scenario in blocks through a compiled inner loop;
``run_reference`` is the slot-by-slot construction through the public
operations and produces bit-identical trajectories, which the test suite
verifies.  ``one_step_expectation_oracle`` computes the exact one-step
expectation by enumerating interaction sets, as an independent check on the
whole sampling-update path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import _kernel
from .graphs import NEGATIVE, POSITIVE, SignedDigraph, positive_cluster_partition
from .sampling import (
    FULL,
    GOSSIP,
    PER_ARC,
    AttentionSchedule,
    InteractionPolicy,
    InteractionSample,
    RandomStream,
    neighbor_sets,
    sample_attention,
    sample_interactions,
)
from .schedule import GraphSchedule, total_graph

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import ScenarioConfig

STATE_REVERSION = "state_reversion"
RELATIVE_STATE_REVERSION = "relative_state_reversion"

HORIZON_REACHED = "horizon_reached"
CONVERGED = "converged"
DIVERGED = "diverged"
NUMERIC_OVERFLOW = "numeric_overflow"

_POLICY_CODES = {PER_ARC: _kernel.POLICY_PER_ARC, GOSSIP: _kernel.POLICY_GOSSIP, FULL: _kernel.POLICY_FULL}

_ORACLE_MAX_ARCS = 16


class ModelError(ValueError):
    """Invalid model configuration."""


class NumericOverflow(RuntimeError):
    """A state magnitude exceeded the configured hard cap."""

    def __init__(self, slot: int, values: np.ndarray):
        super().__init__(f"state magnitude exceeded cap at slot {slot}")
        self.slot = slot
        self.values = values


class TooLarge(ValueError):
    """Exact enumeration was requested beyond the supported arc count."""


@dataclass(frozen=True)
class ModelConfig:
    """Update-law parameters: negative model kind and recommendation weights.

    ``alpha`` must be positive unless ``allow_zero_alpha`` is set (divergence
    scenarios admit ``alpha = 0``); ``beta`` is always positive.  States are
    hard-capped at ``overflow_cap`` and runs are flagged instead of silently
    producing infinities.
    """

    negative_model: str
    alpha: float
    beta: float
    allow_zero_alpha: bool = False
    overflow_cap: float = 1e300

    def __post_init__(self):
        if self.negative_model not in (STATE_REVERSION, RELATIVE_STATE_REVERSION):
            raise ModelError(f"unknown negative model {self.negative_model!r}")
        if self.alpha < 0.0 or (self.alpha == 0.0 and not self.allow_zero_alpha):
            raise ModelError(f"alpha must be > 0 (or 0 with allow_zero_alpha), got {self.alpha}")
        if self.beta <= 0.0:
            raise ModelError(f"beta must be > 0, got {self.beta}")
        if self.overflow_cap <= 0.0:
            raise ModelError(f"overflow cap must be positive, got {self.overflow_cap}")

    @property
    def relative(self) -> bool:
        return self.negative_model == RELATIVE_STATE_REVERSION


@dataclass(frozen=True)
class StateVector:
    """Network state at one slot."""

    t: int
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)


def positive_recommendation(state: StateVector, i: int, pos_neighbors) -> float:
    """Attraction toward the sampled positive in-neighbors; zero when none."""
    s = state.values
    total = 0.0
    for j in sorted(pos_neighbors):
        total += s[j] - s[i]
    return total


def negative_recommendation(state: StateVector, i: int, neg_neighbors, negative_model: str) -> float:
    """Negative-neighbor contribution under the selected model; zero when none."""
    s = state.values
    total = 0.0
    if negative_model == STATE_REVERSION:
        for j in sorted(neg_neighbors):
            total -= s[i] + s[j]
    elif negative_model == RELATIVE_STATE_REVERSION:
        for j in sorted(neg_neighbors):
            total += s[i] - s[j]
    else:
        raise ModelError(f"unknown negative model {negative_model!r}")
    return total


def step(state: StateVector, sample: InteractionSample, B: int, D: int, cfg: ModelConfig) -> StateVector:
    """Synchronous update of every node from state ``t`` to ``t + 1``.

    Raises :class:`NumericOverflow` when the updated state exceeds the cap.
    """
    s = state.values
    out = np.empty_like(s)
    for i in range(len(s)):
        pos, neg = neighbor_sets(sample, i)
        hp = positive_recommendation(state, i, pos)
        hm = negative_recommendation(state, i, neg, cfg.negative_model)
        out[i] = s[i] + cfg.alpha * float(B) * hp + cfg.beta * float(D) * hm
    if np.max(np.abs(out)) > cfg.overflow_cap:
        raise NumericOverflow(state.t + 1, out)
    return StateVector(state.t + 1, out)


@dataclass
class TrajectoryRecord:
    """Recorded sample path of one run.

    States and the per-slot metrics (max magnitude, max, min, gap) are kept
    at every ``record_stride``-th slot plus the terminal slot.  ``attention``
    holds the realised coin values for every executed slot when requested.
    """

    n: int
    horizon: int
    record_stride: int
    seed: int
    run_index: int
    slots: np.ndarray
    states: np.ndarray
    max_abs: np.ndarray
    state_max: np.ndarray
    state_min: np.ndarray
    gap: np.ndarray
    termination: str
    termination_slot: int
    detail: str
    initial_state: np.ndarray
    final_state: np.ndarray
    first_max_abs_cross: int | None = None
    first_gap_cross: int | None = None
    first_gap_floor: int | None = None
    attention: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def diverged(self) -> bool:
        return self.termination == NUMERIC_OVERFLOW or (
            self.termination == DIVERGED
        ) or self.first_max_abs_cross is not None or self.first_gap_cross is not None


def build_initial_state(scenario: "ScenarioConfig", stream: RandomStream) -> np.ndarray:
    """Realise the scenario's initial-state specification."""
    init = scenario.init
    n = scenario.schedule.n
    if init.kind == "explicit":
        values = np.asarray(init.values, dtype=np.float64)
        if values.shape != (n,):
            raise ModelError(f"explicit initial state must have length {n}")
        return values.copy()
    if init.kind == "uniform":
        u = stream.initial_uniforms(n)
        return init.low + u * (init.high - init.low)
    if init.kind == "cluster_levels":
        partition = positive_cluster_partition(total_graph(scenario.schedule).graph)
        levels = init.values
        if len(levels) != partition.count:
            raise ModelError(
                f"cluster_levels supplies {len(levels)} values but the total graph "
                f"has {partition.count} positive clusters"
            )
        values = np.empty(n, dtype=np.float64)
        for level, cluster in zip(levels, partition.clusters):
            for v in cluster:
                values[v] = level
        return values
    raise ModelError(f"unknown initial state kind {init.kind!r}")


def _flatten_graphs(sched: GraphSchedule, policy: InteractionPolicy):
    src, dst, neg, prob = [], [], [], []
    offsets, counts = [], []
    for g in sched.graphs:
        offsets.append(len(src))
        counts.append(g.arc_count)
        probs = policy.arc_probabilities(g)
        for idx, (s_, d_, sign) in enumerate(g.arcs()):
            src.append(s_)
            dst.append(d_)
            neg.append(1 if sign == NEGATIVE else 0)
            prob.append(probs[idx])
    return (
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        np.asarray(neg, dtype=np.int8),
        np.asarray(prob, dtype=np.float64),
        np.asarray(offsets, dtype=np.int64),
        np.asarray(counts, dtype=np.int64),
    )


def _slot_graph_indices(sched: GraphSchedule, t0: int, t1: int) -> np.ndarray:
    if sched.kind == "static":
        return np.zeros(t1 - t0, dtype=np.int64)
    if sched.kind == "periodic":
        return (np.arange(t0, t1, dtype=np.int64)) % len(sched.graphs)
    return np.asarray([sched.graph_index_at(t) for t in range(t0, t1)], dtype=np.int64)


def _metrics_of(values: np.ndarray) -> tuple[float, float, float, float]:
    smax = float(np.max(values))
    smin = float(np.min(values))
    return max(smax, -smin), smax, smin, smax - smin


def run(
    scenario: "ScenarioConfig",
    run_index: int = 0,
    use_fast: bool | None = None,
    block_slots: int = 8192,
) -> TrajectoryRecord:
    """Execute one trajectory of a scenario; deterministic given (seed, run index).

    Iterates environment lookup, interaction sampling, attention coins, and the
    synchronous update until the horizon, a detector (with early stop enabled),
    or the overflow cap.  ``use_fast`` selects the compiled inner loop (the
    default picks it when numba is importable); both paths are bit-identical.
    """
    sched = scenario.schedule
    model = scenario.model
    policy = scenario.policy
    detect = scenario.detect
    horizon = scenario.horizon
    rec_stride = scenario.record_stride

    arc_src, arc_dst, arc_neg, arc_prob, g_off, g_cnt = _flatten_graphs(sched, policy)
    stride = max(sched.max_arc_count(), 1)
    stream = RandomStream(scenario.seed, run_index, stride)
    s = build_initial_state(scenario, stream)
    initial = s.copy()

    m_thr = detect.max_abs_threshold or 0.0
    gap_thr = detect.gap_threshold or 0.0
    gap_floor = detect.gap_floor or 0.0
    window = detect.window or max(100, horizon // 100)
    loop = _kernel.block_loop_fast if (use_fast or use_fast is None) else _kernel.block_loop
    policy_code = _POLICY_CODES[policy.kind]

    slots_parts: list[np.ndarray] = []
    state_parts: list[np.ndarray] = []
    metric_parts: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
    b_parts: list[np.ndarray] = []
    d_parts: list[np.ndarray] = []

    hp = np.zeros(sched.n)
    hm = np.zeros(sched.n)
    first_m = first_gap = first_floor = -1
    status = _kernel.RUNNING
    converged_by_oscillation = False
    t = 0

    while t < horizon:
        t1 = min(t + block_slots, horizon)
        nb = t1 - t
        u_arc = stream.arc_block(t, t1)
        u_b = stream.attention_block("positive", t, t1)
        u_d = stream.attention_block("negative", t, t1)
        q_b = scenario.attention_positive.probs(t, t1)
        q_d = scenario.attention_negative.probs(t, t1)
        slot_g = _slot_graph_indices(sched, t, t1)
        max_rec = nb // rec_stride + 2
        rec_slots = np.zeros(max_rec, dtype=np.int64)
        rec_states = np.zeros((max_rec, sched.n))
        rec_m = np.zeros(max_rec)
        rec_smax = np.zeros(max_rec)
        rec_smin = np.zeros(max_rec)
        rec_gap = np.zeros(max_rec)
        out_b = np.zeros(nb, dtype=np.uint8)
        out_d = np.zeros(nb, dtype=np.uint8)

        n_rec, done, status, first_m, first_gap, first_floor = loop(
            s, t, slot_g, g_off, g_cnt, arc_src, arc_dst, arc_neg, arc_prob,
            policy_code, u_arc, u_b, u_d, q_b, q_d,
            model.alpha, model.beta, model.relative, model.overflow_cap,
            m_thr, gap_thr, gap_floor, scenario.early_stop, rec_stride,
            first_m, first_gap, first_floor,
            rec_slots, rec_states, rec_m, rec_smax, rec_smin, rec_gap,
            out_b, out_d, hp, hm,
        )

        slots_parts.append(rec_slots[:n_rec].copy())
        state_parts.append(rec_states[:n_rec].copy())
        metric_parts.append(
            (rec_m[:n_rec].copy(), rec_smax[:n_rec].copy(), rec_smin[:n_rec].copy(), rec_gap[:n_rec].copy())
        )
        if scenario.record_attention:
            b_parts.append(out_b[:done].copy())
            d_parts.append(out_d[:done].copy())
        t += done
        if status != _kernel.RUNNING:
            break
        if scenario.early_stop and detect.eps and t >= window:
            osc = _trailing_oscillation(slots_parts, state_parts, t, window)
            if osc is not None and osc < detect.eps:
                converged_by_oscillation = True
                break

    slots = np.concatenate(slots_parts) if slots_parts else np.zeros(0, dtype=np.int64)
    states = np.concatenate(state_parts) if state_parts else np.zeros((0, sched.n))
    max_abs = np.concatenate([p[0] for p in metric_parts]) if metric_parts else np.zeros(0)
    smax = np.concatenate([p[1] for p in metric_parts]) if metric_parts else np.zeros(0)
    smin = np.concatenate([p[2] for p in metric_parts]) if metric_parts else np.zeros(0)
    gaps = np.concatenate([p[3] for p in metric_parts]) if metric_parts else np.zeros(0)

    # Account for the terminal state, which the loop tops have not seen when
    # the horizon (or a driver-side stop) ended the run.
    fin_m, fin_smax, fin_smin, fin_gap = _metrics_of(s)
    if status == _kernel.RUNNING:
        if m_thr > 0.0 and first_m < 0 and fin_m >= m_thr:
            first_m = t
        if gap_thr > 0.0 and first_gap < 0 and fin_gap >= gap_thr:
            first_gap = t
        if gap_floor > 0.0 and first_floor < 0 and fin_gap < gap_floor:
            first_floor = t
    if len(slots) == 0 or slots[-1] != t:
        slots = np.append(slots, t)
        states = np.vstack([states, s[None, :]])
        max_abs = np.append(max_abs, fin_m)
        smax = np.append(smax, fin_smax)
        smin = np.append(smin, fin_smin)
        gaps = np.append(gaps, fin_gap)

    if status == _kernel.OVERFLOW:
        termination, detail = NUMERIC_OVERFLOW, f"state magnitude above {model.overflow_cap:g} at t={t}"
    elif status == _kernel.DIVERGED_MAX:
        termination, detail = DIVERGED, f"max_abs >= {m_thr:g} at t={first_m}"
    elif status == _kernel.DIVERGED_GAP:
        termination, detail = DIVERGED, f"gap >= {gap_thr:g} at t={first_gap}"
    elif status == _kernel.GAP_FLOOR:
        termination, detail = CONVERGED, f"gap < {gap_floor:g} at t={first_floor}"
    elif converged_by_oscillation:
        termination, detail = CONVERGED, f"oscillation < {detect.eps:g} over trailing {window} slots at t={t}"
    else:
        termination, detail = HORIZON_REACHED, f"ran all {horizon} slots"

    attention = None
    if scenario.record_attention:
        attention = (
            np.concatenate(b_parts) if b_parts else np.zeros(0, dtype=np.uint8),
            np.concatenate(d_parts) if d_parts else np.zeros(0, dtype=np.uint8),
        )

    return TrajectoryRecord(
        n=sched.n,
        horizon=horizon,
        record_stride=rec_stride,
        seed=scenario.seed,
        run_index=run_index,
        slots=slots,
        states=states,
        max_abs=max_abs,
        state_max=smax,
        state_min=smin,
        gap=gaps,
        termination=termination,
        termination_slot=t,
        detail=detail,
        initial_state=initial,
        final_state=s.copy(),
        first_max_abs_cross=None if first_m < 0 else int(first_m),
        first_gap_cross=None if first_gap < 0 else int(first_gap),
        first_gap_floor=None if first_floor < 0 else int(first_floor),
        attention=attention,
    )


def _trailing_oscillation(slots_parts, state_parts, t_end: int, window: int) -> float | None:
    """Largest per-node oscillation over recorded slots in (t_end - window, t_end]."""
    lo = t_end - window
    collected: list[np.ndarray] = []
    count = 0
    for slots, states in zip(reversed(slots_parts), reversed(state_parts)):
        if len(slots) == 0:
            continue
        keep = slots > lo
        if keep.any():
            collected.append(states[keep])
            count += int(keep.sum())
        if not keep.all():
            break
    if count < 2:
        return None
    block = np.vstack(collected)
    return float(np.max(block.max(axis=0) - block.min(axis=0)))


def run_reference(scenario: "ScenarioConfig", run_index: int = 0) -> TrajectoryRecord:
    """Slot-by-slot execution through the public operations.

    Exists as the readable construction of :func:`run`; the block engine must
    reproduce it bit for bit.  Detector early stops are not implemented here;
    use it on short horizons.
    """
    sched = scenario.schedule
    stride = max(sched.max_arc_count(), 1)
    stream = RandomStream(scenario.seed, run_index, stride)
    values = build_initial_state(scenario, stream)
    state = StateVector(0, values.copy())
    slots, states = [], []
    overflow = False
    for t in range(scenario.horizon):
        if t % scenario.record_stride == 0:
            slots.append(t)
            states.append(state.values.copy())
        g = sched.graph_at(t)
        sample = sample_interactions(g, scenario.policy, stream, t)
        B = sample_attention(scenario.attention_positive, t, stream)
        D = sample_attention(scenario.attention_negative, t, stream)
        try:
            state = step(state, sample, B, D, scenario.model)
        except NumericOverflow as exc:
            state = StateVector(exc.slot, exc.values)
            overflow = True
            break
    slots.append(state.t)
    states.append(state.values.copy())
    states_arr = np.asarray(states)
    smax = states_arr.max(axis=1)
    smin = states_arr.min(axis=1)
    return TrajectoryRecord(
        n=sched.n,
        horizon=scenario.horizon,
        record_stride=scenario.record_stride,
        seed=scenario.seed,
        run_index=run_index,
        slots=np.asarray(slots, dtype=np.int64),
        states=states_arr,
        max_abs=np.maximum(smax, -smin),
        state_max=smax,
        state_min=smin,
        gap=smax - smin,
        termination=NUMERIC_OVERFLOW if overflow else HORIZON_REACHED,
        termination_slot=state.t,
        detail="reference loop",
        initial_state=states_arr[0].copy(),
        final_state=state.values.copy(),
    )


def _interaction_events(g: SignedDigraph, policy: InteractionPolicy):
    """All possible interaction sets with probabilities, as (prob, arc indices)."""
    m = g.arc_count
    if policy.kind == FULL:
        return [(1.0, tuple(range(m)))]
    if policy.kind == GOSSIP:
        if m == 0:
            return [(1.0, ())]
        return [(1.0 / m, (a,)) for a in range(m)]
    if m > _ORACLE_MAX_ARCS:
        raise TooLarge(f"exact enumeration supports at most {_ORACLE_MAX_ARCS} arcs, got {m}")
    probs = policy.arc_probabilities(g)
    events = []
    for mask in range(1 << m):
        prob = 1.0
        active = []
        for a in range(m):
            if mask >> a & 1:
                prob *= probs[a]
                active.append(a)
            else:
                prob *= 1.0 - probs[a]
        if prob > 0.0:
            events.append((prob, tuple(active)))
    return events


def one_step_expectation_oracle(
    state: StateVector,
    g: SignedDigraph,
    policy: InteractionPolicy,
    b: float,
    d: float,
    cfg: ModelConfig,
) -> np.ndarray:
    """Exact expectation of s(t+1) by enumerating interaction sets and coins.

    Supports the independent per-arc and gossip policies (and trivially full
    activation); raises :class:`TooLarge` beyond 16 arcs.
    """
    arcs = g.arcs()
    s0 = np.asarray(state.values, dtype=np.float64)
    expected = np.zeros_like(s0)
    for prob, active in _interaction_events(g, policy):
        hp = np.zeros_like(s0)
        hm = np.zeros_like(s0)
        for a in active:
            src, dst, sign = arcs[a]
            if sign == POSITIVE:
                hp[dst] += s0[src] - s0[dst]
            elif cfg.relative:
                hm[dst] += s0[dst] - s0[src]
            else:
                hm[dst] -= s0[dst] + s0[src]
        for B, w_b in ((0, 1.0 - b), (1, b)):
            for D, w_d in ((0, 1.0 - d), (1, d)):
                w = prob * w_b * w_d
                if w > 0.0:
                    expected += w * (s0 + cfg.alpha * B * hp + cfg.beta * D * hm)
    return expected


def one_step_mc(
    g: SignedDigraph,
    policy: InteractionPolicy,
    s0: np.ndarray,
    b: float,
    d: float,
    cfg: ModelConfig,
    n_draws: int,
    seed: int,
    run_index: int = 0,
    use_fast: bool | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean and standard error of s(1) over independent one-step draws.

    Draws flow through the production sampling layout (each slot of the
    stream is one draw), so this exercises the same activation and update
    arithmetic as :func:`run`.
    """
    arc_src, arc_dst, arc_neg, arc_prob, _, _ = _flatten_graphs(GraphSchedule.static(g), policy)
    stride = max(g.arc_count, 1)
    stream = RandomStream(seed, run_index, stride)
    s0 = np.asarray(s0, dtype=np.float64)
    n = len(s0)
    acc = np.zeros(n)
    acc_sq = np.zeros(n)
    hp = np.zeros(n)
    hm = np.zeros(n)
    fn = _kernel.one_step_sums_fast if (use_fast or use_fast is None) else _kernel.one_step_sums
    block = 65536
    for t0 in range(0, n_draws, block):
        t1 = min(t0 + block, n_draws)
        fn(
            s0,
            arc_src, arc_dst, arc_neg, arc_prob,
            _POLICY_CODES[policy.kind],
            stream.arc_block(t0, t1),
            stream.attention_block("positive", t0, t1),
            stream.attention_block("negative", t0, t1),
            np.full(t1 - t0, b),
            np.full(t1 - t0, d),
            cfg.alpha, cfg.beta, cfg.relative,
            acc, acc_sq, hp, hm,
        )
    mean = acc / n_draws
    var = np.maximum(acc_sq - n_draws * mean**2, 0.0) / max(n_draws - 1, 1)
    return mean, np.sqrt(var / n_draws)
