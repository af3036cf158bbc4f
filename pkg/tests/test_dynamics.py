"""Update law, trajectory engine, and the exact one-step expectation oracle."""

import numpy as np
import pytest

from signeddyn.dynamics import (
    RELATIVE_STATE_REVERSION,
    STATE_REVERSION,
    ModelConfig,
    ModelError,
    NumericOverflow,
    StateVector,
    TooLarge,
    negative_recommendation,
    one_step_expectation_oracle,
    one_step_mc,
    positive_recommendation,
    run,
    run_reference,
    step,
)
from signeddyn.graphs import NEGATIVE, POSITIVE, SignedDigraph
from signeddyn.sampling import (
    FULL,
    GOSSIP,
    PER_ARC,
    AttentionSchedule,
    InteractionPolicy,
    InteractionSample,
)
from signeddyn.scenario import DetectorSettings, InitSpec, ScenarioConfig
from signeddyn.schedule import GraphSchedule


def g_of(n, pos=(), neg=()):
    arcs = [(s, d, POSITIVE) for s, d in pos] + [(s, d, NEGATIVE) for s, d in neg]
    return SignedDigraph(n, arcs)


def make_scenario(schedule, **kw):
    defaults = dict(
        policy=InteractionPolicy(PER_ARC, p=0.5),
        model=ModelConfig(STATE_REVERSION, alpha=0.08, beta=0.08),
        attention_positive=AttentionSchedule("constant", q=0.5, role="positive"),
        attention_negative=AttentionSchedule("constant", q=0.5, role="negative"),
        init=InitSpec("uniform", low=-1.0, high=1.0),
        horizon=200,
        seed=42,
        detect=DetectorSettings(),
    )
    defaults.update(kw)
    return ScenarioConfig(schedule=schedule, **defaults)


S123 = StateVector(0, np.array([1.0, 2.0, 3.0]))
MIXED = g_of(6, pos=[(0, 1), (1, 2), (2, 0), (3, 4)], neg=[(4, 5), (5, 3), (2, 3), (5, 0)])


# -- recommendations ------------------------------------------------------------

def test_positive_recommendation_examples():
    assert positive_recommendation(S123, 1, set()) == 0.0
    assert positive_recommendation(S123, 1, {0}) == -1.0
    assert positive_recommendation(S123, 1, {0, 2}) == 0.0


def test_negative_recommendation_examples():
    assert negative_recommendation(S123, 1, set(), STATE_REVERSION) == 0.0
    assert negative_recommendation(S123, 1, set(), RELATIVE_STATE_REVERSION) == 0.0
    assert negative_recommendation(S123, 1, {0}, STATE_REVERSION) == -3.0
    assert negative_recommendation(S123, 1, {0}, RELATIVE_STATE_REVERSION) == 1.0


# -- step -----------------------------------------------------------------------

def test_step_no_interactions_is_identity():
    cfg = ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25)
    for B in (0, 1):
        for D in (0, 1):
            out = step(S123, InteractionSample(()), B, D, cfg)
            assert out.t == 1
            assert np.array_equal(out.values, S123.values)


def test_step_positive_arc_example():
    cfg = ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25)
    sample = InteractionSample(((0, 1, POSITIVE),))
    out = step(S123, sample, 1, 1, cfg)
    assert np.allclose(out.values, [1.0, 1.75, 3.0])
    cfg_rel = ModelConfig(RELATIVE_STATE_REVERSION, alpha=0.25, beta=0.25)
    out = step(S123, sample, 1, 1, cfg_rel)
    assert np.allclose(out.values, [1.0, 1.75, 3.0])


def test_step_negative_arc_example_both_models():
    sample = InteractionSample(((0, 1, NEGATIVE),))
    out = step(S123, sample, 1, 1, ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25))
    assert np.allclose(out.values, [1.0, 1.25, 3.0])
    out = step(S123, sample, 1, 1, ModelConfig(RELATIVE_STATE_REVERSION, alpha=0.25, beta=0.25))
    assert np.allclose(out.values, [1.0, 2.25, 3.0])


def test_step_gated_off_by_attention():
    sample = InteractionSample(((0, 1, POSITIVE), (2, 1, NEGATIVE)))
    cfg = ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25)
    out = step(S123, sample, 0, 0, cfg)
    assert np.array_equal(out.values, S123.values)


def test_step_overflow_raises():
    big = StateVector(0, np.array([9.0, -9.0, 0.0]))
    sample = InteractionSample(((0, 2, NEGATIVE),))
    # h2- = -(0 + 9) = -9, so s2 jumps to -45 past the cap of 10.
    with pytest.raises(NumericOverflow) as exc:
        step(big, sample, 1, 1, ModelConfig(STATE_REVERSION, alpha=0.25, beta=5.0, overflow_cap=10.0))
    assert exc.value.slot == 1


def test_model_validation():
    with pytest.raises(ModelError):
        ModelConfig("bogus", 0.1, 0.1)
    with pytest.raises(ModelError):
        ModelConfig(STATE_REVERSION, 0.0, 0.1)
    ModelConfig(STATE_REVERSION, 0.0, 0.1, allow_zero_alpha=True)
    with pytest.raises(ModelError):
        ModelConfig(STATE_REVERSION, 0.1, 0.0)


# -- run ------------------------------------------------------------------------

def test_run_horizon_zero_records_only_initial_state():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=0)
    traj = run(sc)
    assert list(traj.slots) == [0]
    assert traj.termination == "horizon_reached"
    assert np.array_equal(traj.states[0], traj.initial_state)


def test_run_deterministic_given_seed():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=500)
    a = run(sc)
    b = run(sc)
    assert np.array_equal(a.states, b.states)
    assert a.termination == b.termination


def test_run_matches_reference_per_arc():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=300)
    fast = run(sc)
    ref = run_reference(sc)
    assert np.array_equal(fast.slots, ref.slots)
    assert np.array_equal(fast.states, ref.states)


def test_run_matches_reference_gossip_and_full():
    for kind in (GOSSIP, FULL):
        sc = make_scenario(
            GraphSchedule.static(MIXED), policy=InteractionPolicy(kind), horizon=250
        )
        assert np.array_equal(run(sc).states, run_reference(sc).states)


def test_run_matches_reference_periodic_and_scripted():
    a = g_of(4, pos=[(0, 1), (1, 2)])
    b = g_of(4, pos=[(2, 3), (3, 0)], neg=[(1, 3)])
    for sched in (
        GraphSchedule.periodic([a, b]),
        GraphSchedule.scripted({3: b, 7: b}, default=a),
    ):
        sc = make_scenario(
            sched,
            model=ModelConfig(RELATIVE_STATE_REVERSION, alpha=0.2, beta=0.5),
            horizon=200,
        )
        assert np.array_equal(run(sc).states, run_reference(sc).states)


def test_run_python_and_fast_paths_identical():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=400)
    fast = run(sc, use_fast=True)
    slow = run(sc, use_fast=False)
    assert np.array_equal(fast.states, slow.states)
    assert fast.termination == slow.termination


def test_run_block_size_invariance():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=300)
    a = run(sc, block_slots=7)
    b = run(sc, block_slots=4096)
    assert np.array_equal(a.states, b.states)
    assert a.termination_slot == b.termination_slot


def test_run_sign_symmetry():
    init = (0.6, -0.2, 0.9, -0.8, 0.3, 0.1)
    for model in (STATE_REVERSION, RELATIVE_STATE_REVERSION):
        base = make_scenario(
            GraphSchedule.static(MIXED),
            model=ModelConfig(model, alpha=0.08, beta=0.08),
            init=InitSpec("explicit", values=init),
            horizon=300,
        )
        flipped = make_scenario(
            GraphSchedule.static(MIXED),
            model=ModelConfig(model, alpha=0.08, beta=0.08),
            init=InitSpec("explicit", values=tuple(-v for v in init)),
            horizon=300,
        )
        assert np.array_equal(run(flipped).states, -run(base).states)


def test_run_record_stride_subsamples():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=100, record_stride=10)
    traj = run(sc)
    assert list(traj.slots) == [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
    dense = run(make_scenario(GraphSchedule.static(MIXED), horizon=100))
    assert np.array_equal(traj.states, dense.states[::10])


def test_run_overflow_flagged():
    sc = make_scenario(
        GraphSchedule.static(g_of(3, neg=[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)])),
        model=ModelConfig(STATE_REVERSION, alpha=0.1, beta=2000.0, overflow_cap=1e30),
        attention_positive=AttentionSchedule("constant", q=0.5, role="positive"),
        attention_negative=AttentionSchedule("constant", q=0.9, role="negative"),
        init=InitSpec("explicit", values=(1.0, -0.5, 0.25)),
        horizon=5000,
    )
    traj = run(sc)
    assert traj.termination == "numeric_overflow"
    assert traj.termination_slot < 5000
    assert np.all(np.isfinite(traj.final_state))
    ref = run_reference(sc)
    assert ref.termination == "numeric_overflow"
    assert ref.termination_slot == traj.termination_slot


def test_run_attention_recording():
    sc = make_scenario(GraphSchedule.static(MIXED), horizon=50, record_attention=True)
    traj = run(sc)
    b, d = traj.attention
    assert len(b) == len(d) == 50
    assert set(np.unique(b)) <= {0, 1}


def test_run_early_stop_divergence():
    sc = make_scenario(
        GraphSchedule.static(g_of(3, neg=[(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)])),
        model=ModelConfig(STATE_REVERSION, alpha=0.1, beta=2000.0),
        init=InitSpec("explicit", values=(1.0, -0.5, 0.25)),
        horizon=100000,
        early_stop=True,
        detect=DetectorSettings(max_abs_threshold=1e8, gap_threshold=None),
    )
    traj = run(sc)
    assert traj.termination == "diverged"
    assert traj.first_max_abs_cross == traj.termination_slot
    assert traj.max_abs[-1] >= 1e8


# -- exact one-step expectation ---------------------------------------------------

def test_oracle_empty_graph_is_identity():
    g = SignedDigraph(3, [])
    cfg = ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25)
    out = one_step_expectation_oracle(S123, g, InteractionPolicy(PER_ARC, p=0.5), 0.6, 0.3, cfg)
    assert np.allclose(out, S123.values)


def test_oracle_zero_attention_is_identity():
    g = g_of(3, pos=[(0, 1)], neg=[(1, 2)])
    cfg = ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25)
    out = one_step_expectation_oracle(S123, g, InteractionPolicy(PER_ARC, p=0.5), 0.0, 0.0, cfg)
    assert np.allclose(out, S123.values)


def test_oracle_single_arc_hand_value():
    g = g_of(3, pos=[(0, 1)])
    cfg = ModelConfig(STATE_REVERSION, alpha=0.25, beta=0.25)
    out = one_step_expectation_oracle(S123, g, InteractionPolicy(PER_ARC, p=0.5), 1.0, 0.0, cfg)
    assert np.allclose(out, [1.0, 1.875, 3.0])


def test_oracle_rejects_large_graphs():
    arcs = [(s, d, POSITIVE) for s in range(5) for d in range(5) if s != d]
    g = SignedDigraph(5, arcs)  # 20 arcs
    with pytest.raises(TooLarge):
        one_step_expectation_oracle(
            StateVector(0, np.zeros(5)), g, InteractionPolicy(PER_ARC, p=0.5), 0.5, 0.5,
            ModelConfig(STATE_REVERSION, alpha=0.1, beta=0.1),
        )


@pytest.mark.parametrize("model", [STATE_REVERSION, RELATIVE_STATE_REVERSION])
@pytest.mark.parametrize("kind", [PER_ARC, GOSSIP, FULL])
def test_monte_carlo_matches_oracle(model, kind):
    g = g_of(3, pos=[(0, 1), (2, 0)], neg=[(1, 2)])
    cfg = ModelConfig(model, alpha=0.25, beta=0.5)
    policy = InteractionPolicy(kind, p=0.5)
    s0 = np.array([1.0, -2.0, 3.0])
    exact = one_step_expectation_oracle(StateVector(0, s0), g, policy, 0.6, 0.3, cfg)
    mean, se = one_step_mc(g, policy, s0, 0.6, 0.3, cfg, n_draws=50_000, seed=7)
    assert np.all(np.abs(mean - exact) <= 4.0 * se + 1e-12 * (1.0 + np.abs(exact)))
