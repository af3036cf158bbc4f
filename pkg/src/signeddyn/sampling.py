"""Randomness for the simulator: interaction sampling and attention coins.

Every random quantity in a run is drawn from one of four purpose-tagged
substreams derived from ``(master seed, run index, purpose)`` with a
counter-based generator (Philox), so the draws for a given slot live at
fixed stream positions:

* ``arcs``      - slot ``t`` owns positions ``[t*stride, (t+1)*stride)``,
                  where ``stride`` covers the largest arc count in the
                  schedule; an interaction sample consumes one uniform per
                  potential arc regardless of policy kind.
* ``positive``  - one uniform per slot for the shared positive-attention coin.
* ``negative``  - one uniform per slot for the shared negative-attention coin.
* ``init``      - uniforms for randomised initial states.

This layout makes draws independent of evaluation order: substreams can be
read per slot, in blocks, or out of order and always produce identical
values, and two executions with equal seeds are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .graphs import NEGATIVE, POSITIVE, SignedDigraph

PER_ARC = "per_arc_independent"
GOSSIP = "gossip_single_arc"
FULL = "full_activation"

_POLICY_KINDS = (PER_ARC, GOSSIP, FULL)

CONSTANT = "constant"
POWER_DECAY = "power_decay"
SCRIPTED = "scripted"

_PURPOSE_CODES = {"arcs": 0, "positive": 1, "negative": 2, "init": 3}


class PolicyError(ValueError):
    """Invalid interaction policy or attention schedule."""


@dataclass(frozen=True)
class InteractionPolicy:
    """How the random interaction set is sampled from the slot's arc set.

    * ``per_arc_independent`` - every arc joins independently, with
      probability ``p`` (or its entry in ``per_arc``).
    * ``gossip_single_arc``   - exactly one arc, uniform over the arc set.
    * ``full_activation``     - all arcs, deterministically.

    ``p_lower``/``p_upper`` are declared per-arc probability bounds; when
    absent they are derived from the configured probabilities.
    """

    kind: str
    p: float = 1.0
    per_arc: Mapping[tuple[int, int], float] | None = None
    p_lower: float | None = None
    p_upper: float | None = None

    def __post_init__(self):
        if self.kind not in _POLICY_KINDS:
            raise PolicyError(f"unknown interaction policy kind {self.kind!r}")
        if not (0.0 <= self.p <= 1.0):
            raise PolicyError(f"interaction probability must be in [0, 1], got {self.p}")
        if self.per_arc is not None:
            for arc, prob in self.per_arc.items():
                if not (0.0 <= prob <= 1.0):
                    raise PolicyError(f"per-arc probability for {arc} out of range: {prob}")
        if self.p_lower is not None or self.p_upper is not None:
            lo = 0.0 if self.p_lower is None else self.p_lower
            hi = 1.0 if self.p_upper is None else self.p_upper
            plo, phi = self._configured_range()
            if not (0.0 < lo <= plo and phi <= hi < 1.0):
                raise PolicyError(
                    f"declared bounds ({self.p_lower}, {self.p_upper}) do not bracket "
                    f"the configured probabilities ({plo}, {phi})"
                )

    def _configured_range(self) -> tuple[float, float]:
        probs = [self.p]
        if self.per_arc:
            probs.extend(self.per_arc.values())
        return min(probs), max(probs)

    def arc_probabilities(self, g: SignedDigraph) -> np.ndarray:
        """Activation probability per arc of ``g`` (in ``g.arcs()`` order)."""
        if self.kind == FULL:
            return np.ones(g.arc_count)
        if self.kind == GOSSIP:
            m = g.arc_count
            return np.full(m, 1.0 / m) if m else np.zeros(0)
        out = np.full(g.arc_count, self.p)
        if self.per_arc:
            for idx, (src, dst, _) in enumerate(g.arcs()):
                if (src, dst) in self.per_arc:
                    out[idx] = self.per_arc[(src, dst)]
        return out

    def prob_range(self, graphs: Iterable[SignedDigraph]) -> tuple[float, float]:
        """Range of single-arc activation probabilities across the graphs."""
        lo, hi = 1.0, 0.0
        for g in graphs:
            if g.arc_count == 0:
                continue
            probs = self.arc_probabilities(g)
            lo = min(lo, float(probs.min()))
            hi = max(hi, float(probs.max()))
        if hi == 0.0:
            return 0.0, 0.0
        return lo, hi

    @property
    def independent_arcs(self) -> bool:
        """Whether arc activations are mutually independent (a design fact)."""
        return self.kind == PER_ARC


@dataclass(frozen=True)
class AttentionSchedule:
    """Per-slot Bernoulli success probability for one attention coin.

    Kinds: ``constant`` with probability ``q``; ``power_decay`` with
    ``q_t = c / (t + 1) ** gamma``; ``scripted`` with an explicit list of
    probabilities (zero beyond the end of the list).
    """

    kind: str
    q: float = 0.0
    c: float = 0.0
    gamma: float = 1.0
    values: tuple[float, ...] = ()
    role: str = "positive"

    def __post_init__(self):
        if self.kind not in (CONSTANT, POWER_DECAY, SCRIPTED):
            raise PolicyError(f"unknown attention schedule kind {self.kind!r}")
        if self.role not in ("positive", "negative"):
            raise PolicyError(f"attention role must be positive or negative, got {self.role!r}")
        if self.kind == CONSTANT and not (0.0 <= self.q <= 1.0):
            raise PolicyError(f"constant attention probability out of range: {self.q}")
        if self.kind == POWER_DECAY:
            if not (0.0 <= self.c <= 1.0):
                raise PolicyError(f"power-decay scale must be in [0, 1], got {self.c}")
            if self.gamma <= 0.0:
                raise PolicyError(f"power-decay exponent must be positive, got {self.gamma}")
        if self.kind == SCRIPTED:
            for v in self.values:
                if not (0.0 <= v <= 1.0):
                    raise PolicyError(f"scripted attention probability out of range: {v}")

    def prob(self, t: int) -> float:
        if self.kind == CONSTANT:
            return self.q
        if self.kind == POWER_DECAY:
            # Route through the vectorised path so scalar and block queries
            # agree to the last bit (libm pow differs from numpy's).
            return float(self.probs(t, t + 1)[0])
        return self.values[t] if t < len(self.values) else 0.0

    def probs(self, t0: int, t1: int) -> np.ndarray:
        ts = np.arange(t0, t1, dtype=np.float64)
        if self.kind == CONSTANT:
            return np.full(t1 - t0, self.q)
        if self.kind == POWER_DECAY:
            return self.c / (ts + 1.0) ** self.gamma
        out = np.zeros(t1 - t0)
        for i, t in enumerate(range(t0, t1)):
            if t < len(self.values):
                out[i] = self.values[t]
        return out

    def summable(self) -> bool | None:
        """Analytic classification of the series sum; None when undecidable."""
        if self.kind == CONSTANT:
            return self.q == 0.0
        if self.kind == POWER_DECAY:
            return self.c == 0.0 or self.gamma > 1.0
        return None

    def partial_sum(self, horizon: int) -> float:
        total = 0.0
        step = 1 << 20
        for t0 in range(0, horizon, step):
            total += float(np.sum(self.probs(t0, min(t0 + step, horizon))))
        return total


@dataclass(frozen=True)
class SummabilityReport:
    classification: str | None  # "summable" | "not_summable" | None for scripted
    partial_sum: float
    horizon: int


def summability_report(sched: AttentionSchedule, horizon: int = 10**6) -> SummabilityReport:
    summable = sched.summable()
    label = None if summable is None else ("summable" if summable else "not_summable")
    return SummabilityReport(label, sched.partial_sum(horizon), horizon)


class RandomStream:
    """Purpose-tagged substreams for one ``(master seed, run index)`` pair.

    ``arc_stride`` is the number of uniforms reserved per slot on the arcs
    substream; it must cover the largest arc count the schedule can present.
    """

    def __init__(self, seed: int, run_index: int = 0, arc_stride: int = 1):
        if seed < 0:
            raise PolicyError(f"master seed must be non-negative, got {seed}")
        if run_index < 0:
            raise PolicyError(f"run index must be non-negative, got {run_index}")
        self.seed = int(seed)
        self.run_index = int(run_index)
        self.arc_stride = max(int(arc_stride), 1)

    def _generator_at(self, purpose: str, offset: int) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.run_index, _PURPOSE_CODES[purpose])
        )
        bg = np.random.Philox(ss)
        # Philox advances in blocks of four outputs; land on the aligned
        # block and discard the remainder to reach an exact draw position.
        if offset:
            bg.advance(offset // 4)
        gen = np.random.Generator(bg)
        if offset % 4:
            gen.random(offset % 4)
        return gen

    def arc_block(self, t0: int, t1: int) -> np.ndarray:
        """Arc uniforms for slots [t0, t1), shaped (t1 - t0, arc_stride)."""
        gen = self._generator_at("arcs", t0 * self.arc_stride)
        return gen.random((t1 - t0, self.arc_stride))

    def arc_uniforms(self, t: int) -> np.ndarray:
        return self.arc_block(t, t + 1)[0]

    def attention_block(self, role: str, t0: int, t1: int) -> np.ndarray:
        """Attention-coin uniforms for slots [t0, t1)."""
        if role not in ("positive", "negative"):
            raise PolicyError(f"unknown attention role {role!r}")
        return self._generator_at(role, t0).random(t1 - t0)

    def initial_uniforms(self, n: int) -> np.ndarray:
        return self._generator_at("init", 0).random(n)


@dataclass(frozen=True)
class InteractionSample:
    """A realised interaction set: the sampled arcs of one slot, with signs."""

    arcs: tuple[tuple[int, int, int], ...]
    empty_graph: bool = False  # gossip requested on a slot with no arcs

    @property
    def positive_arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple((s, d) for s, d, sign in self.arcs if sign == POSITIVE)

    @property
    def negative_arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple((s, d) for s, d, sign in self.arcs if sign == NEGATIVE)


def activation_mask(u: np.ndarray, probs: np.ndarray, kind: str) -> np.ndarray:
    """Arc activation decisions from one slot's uniforms.

    ``u`` must hold at least ``len(probs)`` values; exactly the reserved
    uniforms are read so the stream layout is policy-independent.
    """
    m = len(probs)
    if kind == FULL:
        return np.ones(m, dtype=bool)
    if kind == GOSSIP:
        mask = np.zeros(m, dtype=bool)
        if m:
            mask[min(int(u[0] * m), m - 1)] = True
        return mask
    return u[:m] < probs


def sample_interactions(
    g: SignedDigraph, policy: InteractionPolicy, stream: RandomStream, slot: int = 0
) -> InteractionSample:
    """Sample the interacting arc set for one slot."""
    arcs = g.arcs()
    m = len(arcs)
    if m == 0:
        return InteractionSample((), empty_graph=policy.kind == GOSSIP)
    u = stream.arc_uniforms(slot)
    if len(u) < m:
        raise PolicyError(f"stream arc stride {len(u)} below arc count {m}")
    mask = activation_mask(u, policy.arc_probabilities(g), policy.kind)
    return InteractionSample(tuple(a for a, keep in zip(arcs, mask) if keep))


def sample_attention(sched: AttentionSchedule, t: int, stream: RandomStream) -> int:
    """One shared Bernoulli attention coin for slot ``t``."""
    u = stream.attention_block(sched.role, t, t + 1)[0]
    return int(u < sched.prob(t))


def neighbor_sets(sample: InteractionSample, i: int) -> tuple[set[int], set[int]]:
    """In-neighbors of node ``i`` in the sample, split by sign."""
    pos = {s for s, d, sign in sample.arcs if d == i and sign == POSITIVE}
    neg = {s for s, d, sign in sample.arcs if d == i and sign == NEGATIVE}
    return pos, neg
