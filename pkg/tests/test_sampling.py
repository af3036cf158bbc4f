"""Interaction sampling, attention coins, and the seeded stream contract."""

import math

import numpy as np
import pytest

from signeddyn.graphs import NEGATIVE, POSITIVE, SignedDigraph
from signeddyn.sampling import (
    FULL,
    GOSSIP,
    PER_ARC,
    AttentionSchedule,
    InteractionPolicy,
    PolicyError,
    RandomStream,
    neighbor_sets,
    sample_attention,
    sample_interactions,
    summability_report,
)


def g_of(n, pos=(), neg=()):
    arcs = [(s, d, POSITIVE) for s, d in pos] + [(s, d, NEGATIVE) for s, d in neg]
    return SignedDigraph(n, arcs)


FOUR_ARCS = g_of(4, pos=[(0, 1), (1, 2)], neg=[(2, 3), (3, 0)])


def stream_for(g, seed=123, run=0):
    return RandomStream(seed, run, arc_stride=g.arc_count)


def test_certain_activation_selects_all_arcs():
    s = stream_for(FOUR_ARCS)
    sample = sample_interactions(FOUR_ARCS, InteractionPolicy(PER_ARC, p=1.0), s, 0)
    assert set(sample.arcs) == set(FOUR_ARCS.arcs())


def test_per_arc_empirical_frequency():
    n_draws = 100_000
    p = 0.4
    policy = InteractionPolicy(PER_ARC, p=p)
    stream = stream_for(FOUR_ARCS)
    # Each slot gives an independent draw; read the whole block at once.
    u = stream.arc_block(0, n_draws)
    counts = (u[:, : FOUR_ARCS.arc_count] < p).sum(axis=0)
    bound = 3.0 * math.sqrt(p * (1 - p) / n_draws)
    for c in counts:
        assert abs(c / n_draws - p) < bound
    # Spot-check the sampler agrees with the raw block on a few slots.
    for t in (0, 17, 99_999):
        sample = sample_interactions(FOUR_ARCS, policy, stream, t)
        expect = {a for a, keep in zip(FOUR_ARCS.arcs(), u[t] < p) if keep}
        assert set(sample.arcs) == expect


def test_gossip_single_arc_uniform():
    g = g_of(3, pos=[(0, 1), (1, 2)], neg=[(2, 0)])
    stream = stream_for(g)
    n_draws = 100_000
    u = stream.arc_block(0, n_draws)
    idx = np.minimum((u[:, 0] * 3).astype(int), 2)
    freq = np.bincount(idx, minlength=3) / n_draws
    bound = 3.0 * math.sqrt((1 / 3) * (2 / 3) / n_draws)
    assert np.all(np.abs(freq - 1 / 3) < bound)
    for t in (0, 5, 1234):
        sample = sample_interactions(g, InteractionPolicy(GOSSIP), stream, t)
        assert len(sample.arcs) == 1


def test_gossip_empty_graph_flagged():
    g = SignedDigraph(3, [])
    sample = sample_interactions(g, InteractionPolicy(GOSSIP), RandomStream(1), 0)
    assert sample.arcs == () and sample.empty_graph


def test_full_activation():
    sample = sample_interactions(FOUR_ARCS, InteractionPolicy(FULL), stream_for(FOUR_ARCS), 3)
    assert set(sample.arcs) == set(FOUR_ARCS.arcs())


def test_attention_constant_extremes():
    stream = RandomStream(7)
    zero = AttentionSchedule("constant", q=0.0)
    one = AttentionSchedule("constant", q=1.0)
    assert all(sample_attention(zero, t, stream) == 0 for t in range(50))
    assert all(sample_attention(one, t, stream) == 1 for t in range(50))


def test_attention_power_decay_empirical_mean():
    sched = AttentionSchedule("power_decay", c=0.5, gamma=2.0)
    assert sched.prob(0) == 0.5
    n_draws = 100_000
    u = RandomStream(99).attention_block("positive", 0, n_draws)
    mean = float((u < 0.5).mean())
    assert abs(mean - 0.5) < 3.0 * math.sqrt(0.25 / n_draws)


def test_neighbor_sets_direction():
    from signeddyn.sampling import InteractionSample

    s = InteractionSample(((1, 0, POSITIVE),))
    assert neighbor_sets(s, 0) == ({1}, set())
    s = InteractionSample(((0, 1, POSITIVE),))
    assert neighbor_sets(s, 0) == (set(), set())
    s = InteractionSample(((1, 0, POSITIVE), (2, 0, NEGATIVE)))
    assert neighbor_sets(s, 0) == ({1}, {2})


def test_summability_constant():
    rep = summability_report(AttentionSchedule("constant", q=0.3), horizon=1000)
    assert rep.classification == "not_summable"
    assert abs(rep.partial_sum - 300.0) < 1e-9


def test_summability_power_decay_basel():
    rep = summability_report(AttentionSchedule("power_decay", c=1.0, gamma=2.0), horizon=10**6)
    assert rep.classification == "summable"
    assert abs(rep.partial_sum - math.pi**2 / 6) < 1e-5


def test_summability_harmonic():
    rep = summability_report(AttentionSchedule("power_decay", c=1.0, gamma=1.0), horizon=100)
    assert rep.classification == "not_summable"


def test_summability_scripted_unclassified():
    rep = summability_report(AttentionSchedule("scripted", values=(0.5, 0.25)), horizon=10)
    assert rep.classification is None
    assert abs(rep.partial_sum - 0.75) < 1e-12


def test_stream_reproducibility_and_isolation():
    a = RandomStream(42, 3, arc_stride=5)
    b = RandomStream(42, 3, arc_stride=5)
    assert np.array_equal(a.arc_block(10, 20), b.arc_block(10, 20))
    # Order independence: per-slot access equals block access.
    block = a.arc_block(0, 50)
    for t in (0, 7, 49):
        assert np.array_equal(a.arc_uniforms(t), block[t])
    att = a.attention_block("negative", 0, 100)
    assert np.array_equal(a.attention_block("negative", 40, 60), att[40:60])


def test_stream_purposes_differ():
    s = RandomStream(42, 0, arc_stride=1)
    pos = s.attention_block("positive", 0, 100)
    neg = s.attention_block("negative", 0, 100)
    arcs = s.arc_block(0, 100)[:, 0]
    assert not np.array_equal(pos, neg)
    assert not np.array_equal(pos, arcs)


def test_stream_runs_differ():
    a = RandomStream(42, 0, arc_stride=1).arc_block(0, 100)
    b = RandomStream(42, 1, arc_stride=1).arc_block(0, 100)
    assert not np.array_equal(a, b)


def test_policy_validation():
    with pytest.raises(PolicyError):
        InteractionPolicy("bogus")
    with pytest.raises(PolicyError):
        InteractionPolicy(PER_ARC, p=1.5)
    with pytest.raises(PolicyError):
        InteractionPolicy(PER_ARC, p=0.5, p_lower=0.6)  # bound above configured p
    with pytest.raises(PolicyError):
        AttentionSchedule("constant", q=-0.1)
    with pytest.raises(PolicyError):
        AttentionSchedule("power_decay", c=0.5, gamma=0.0)


def test_declared_bounds_satisfied_by_construction():
    pol = InteractionPolicy(PER_ARC, p=0.5, p_lower=0.4, p_upper=0.6)
    lo, hi = pol.prob_range([FOUR_ARCS])
    assert pol.p_lower <= lo and hi <= pol.p_upper
