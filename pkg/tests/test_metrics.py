"""Metrics, detectors, derived constants and verdict aggregation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from signeddyn.metrics import (
    BIPOLAR,
    CONVERGED_VERDICT,
    DerivedConstants,
    InvalidAlpha,
    NoSurvivorResult,
    aggregate_verdicts,
    classify_run,
    compute_metrics,
    detect_bipolar_clustering,
    detect_convergence,
    detect_divergence,
    detect_no_survivor,
    wilson_interval,
    window_coefficients,
    RunVerdict,
)
from signeddyn.dynamics import TrajectoryRecord
from signeddyn.sampling import AttentionSchedule


def traj_from_states(states, stride=1):
    states = np.asarray(states, dtype=np.float64)
    slots = np.arange(0, len(states) * stride, stride, dtype=np.int64)
    smax = states.max(axis=1)
    smin = states.min(axis=1)
    return TrajectoryRecord(
        n=states.shape[1],
        horizon=int(slots[-1]),
        record_stride=stride,
        seed=0,
        run_index=0,
        slots=slots,
        states=states,
        max_abs=np.maximum(smax, -smin),
        state_max=smax,
        state_min=smin,
        gap=smax - smin,
        termination="horizon_reached",
        termination_slot=int(slots[-1]),
        detail="",
        initial_state=states[0].copy(),
        final_state=states[-1].copy(),
    )


def test_compute_metrics_examples():
    assert compute_metrics(np.zeros(3)) == (0.0, 0.0, 0.0, 0.0)
    assert compute_metrics(np.array([-2.0, 1.0, 3.0])) == (3.0, 3.0, -2.0, 5.0)
    assert compute_metrics(np.array([-5.0, 1.0, 3.0])) == (5.0, 3.0, -5.0, 8.0)


def test_derived_constants_formulas():
    c = DerivedConstants(n=3, window=1, alpha=0.2, beta=0.05)
    assert math.isclose(c.gamma_star, 1 - 0.25 * 2)
    assert math.isclose(c.lambda_star, 1 - 0.2 * 2)
    assert math.isclose(c.rho_star, 0.2)
    assert c.k0 == 3


def test_window_coefficients_example_values():
    # n=3, K=1, p*=0.5, alpha=0.2, b=0.9, d=1e-6, beta=0.05
    wc = window_coefficients(
        3, 1, 0.2, 0.05, 0.5,
        AttentionSchedule("constant", q=0.9),
        AttentionSchedule("constant", q=1e-6, role="negative"),
        m=0,
    )
    assert abs(wc.x - 7.29e-4) < 2e-6
    assert abs(wc.y - 5.18e-6) < 2e-8
    assert 0.0 <= wc.x - wc.y <= 1.0


def test_window_coefficients_degenerate_schedules():
    zero_d = window_coefficients(
        3, 1, 0.2, 0.05, 0.5,
        AttentionSchedule("constant", q=0.9),
        AttentionSchedule("constant", q=0.0, role="negative"),
        m=3,
    )
    assert zero_d.y == 0.0
    zero_b = window_coefficients(
        3, 1, 0.2, 0.05, 0.5,
        AttentionSchedule("constant", q=0.0),
        AttentionSchedule("constant", q=0.1, role="negative"),
        m=0,
    )
    assert zero_b.x == 0.0 and zero_b.j == 0.0


def test_window_coefficients_rejects_bad_alpha():
    with pytest.raises(InvalidAlpha):
        window_coefficients(
            3, 1, 0.5, 0.05, 0.5,
            AttentionSchedule("constant", q=0.9),
            AttentionSchedule("constant", q=0.1, role="negative"),
            m=0,
        )


def test_window_coefficients_constant_schedules_independent_of_m():
    kwargs = dict(
        n=4, window=2, alpha=0.1, beta=0.3, p_star=0.4,
        attention_positive=AttentionSchedule("constant", q=0.7),
        attention_negative=AttentionSchedule("constant", q=0.05, role="negative"),
    )
    a = window_coefficients(m=0, **kwargs)
    b = window_coefficients(m=17, **kwargs)
    assert (a.x, a.y, a.j, a.w) == (b.x, b.y, b.j, b.w)


@hsettings(max_examples=100, deadline=None)
@given(
    n=st.integers(3, 8),
    window=st.integers(1, 4),
    alpha_frac=st.floats(0.05, 0.95),
    beta=st.floats(0.01, 2.0),
    p_star=st.floats(0.05, 0.95),
    b=st.floats(0.0, 1.0),
    d=st.floats(0.0, 0.5),
    m=st.integers(0, 5),
)
def test_window_coefficients_match_plain_loop(n, window, alpha_frac, beta, p_star, b, d, m):
    alpha = alpha_frac / (n - 1)  # keeps rho_star positive
    pos = AttentionSchedule("constant", q=b)
    neg = AttentionSchedule("power_decay", c=d, gamma=1.5, role="negative")
    wc = window_coefficients(n, window, alpha, beta, p_star, pos, neg, m)
    # Independent straightforward re-computation.
    k0 = (2 * n - 3) * window
    rho = min(alpha, 1 - (n - 1) * alpha)
    bd = 1.0
    keep = 1.0
    j = 1.0
    w = 0.0
    for t in range(m * k0, (m + 1) * k0):
        bt = pos.prob(t)
        dt = neg.prob(t)
        bd *= bt * (1.0 - dt)
        keep *= 1.0 - dt
        j *= bt
        w += dt
    assert wc.x == p_star ** (n - 1) * rho**k0 / 2.0 * bd
    assert wc.y == (1.0 + 2.0 * beta * (n - 1)) ** k0 * (1.0 - keep)
    assert wc.j == j and wc.w == w
    assert wc.x >= 0.0 and wc.y >= 0.0 and 0.0 <= wc.j <= 1.0 and wc.w >= 0.0


# -- convergence detector ------------------------------------------------------

def test_detect_convergence_constant_trajectory():
    traj = traj_from_states([[1.0, -2.0]] * 50)
    limits = detect_convergence(traj, window=20, eps=1e-9)
    assert limits is not None
    assert np.allclose(limits, [1.0, -2.0])


def test_detect_convergence_oscillation_blocks():
    states = [[(-1.0) ** t, 0.0] for t in range(60)]
    traj = traj_from_states(states)
    assert detect_convergence(traj, window=20, eps=1.9) is None
    assert detect_convergence(traj, window=20, eps=2.1) is not None


def test_detect_convergence_geometric_decay():
    states = [[2.0 ** (-t)] * 3 for t in range(101)]
    traj = traj_from_states(states)
    limits = detect_convergence(traj, window=50, eps=1e-6)
    assert limits is not None
    assert np.all(np.abs(limits) < 1e-6)


# -- bipolar detector ------------------------------------------------------------

def test_bipolar_exact_pattern():
    res = detect_bipolar_clustering(np.array([2.0, 2.0, -2.0, -2.0]), ((0, 1), (2, 3)), 1e-6)
    assert res.match and res.y_star == 2.0


def test_bipolar_degenerate_zero():
    res = detect_bipolar_clustering(np.zeros(4), ((0, 1), (2, 3)), 1e-6)
    assert res.match and res.y_star == 0.0


def test_bipolar_asymmetry_rejected():
    res = detect_bipolar_clustering(np.array([2.0, 2.0, -1.9, -2.0]), ((0, 1), (2, 3)), 1e-3)
    assert not res.match


def test_bipolar_initial_l1_bound():
    limits = np.array([2.0, 2.0, -2.0, -2.0])
    assert detect_bipolar_clustering(limits, ((0, 1), (2, 3)), 1e-6, initial_l1=5.0).match
    assert not detect_bipolar_clustering(limits, ((0, 1), (2, 3)), 1e-6, initial_l1=1.0).match


def test_bipolar_invariant_under_global_flip_with_sides_swapped():
    limits = np.array([1.5, 1.5, -1.5, -1.5])
    a = detect_bipolar_clustering(limits, ((0, 1), (2, 3)), 1e-9)
    b = detect_bipolar_clustering(-limits, ((2, 3), (0, 1)), 1e-9)
    assert a.match and b.match and a.y_star == b.y_star


# -- divergence / no-survivor ------------------------------------------------------

def test_detect_divergence_never_crossed():
    traj = traj_from_states([[1.0, -1.0]] * 30)
    assert detect_divergence(traj, 1e6) is None


def test_detect_divergence_geometric_growth():
    states = [[2.0**t, 0.0] for t in range(31)]
    traj = traj_from_states(states)
    assert detect_divergence(traj, 1e6, "max_abs") == 20


def test_detect_divergence_gap_at_slot_zero():
    traj = traj_from_states([[5.0, 0.0]] * 5)
    assert detect_divergence(traj, 4.0, "max_gap") == 0


def test_no_survivor_all_crossed():
    states = [[t * 1.0, t * 2.0] for t in range(20)]
    res = detect_no_survivor(traj_from_states(states), threshold=10.0)
    assert res.all_crossed
    assert res.crossings == {0: 10, 1: 5}


def test_no_survivor_with_pinned_node():
    states = [[t * 2.0, 0.0] for t in range(20)]
    res = detect_no_survivor(traj_from_states(states), threshold=10.0)
    assert res.survivors == (1,)


def test_no_survivor_pair_mode_equal_growth():
    states = [[t * 2.0, t * 2.0] for t in range(20)]
    res = detect_no_survivor(traj_from_states(states), threshold=1.0, mode="per_pair")
    assert res.survivors == ((0, 1),)


# -- aggregation ---------------------------------------------------------------

def test_wilson_interval_known_values():
    low, high = wilson_interval(95, 100)
    assert 0.88 < low < 0.89 and high > 0.97
    low, _ = wilson_interval(100, 100)
    assert low > 0.96
    low, high = wilson_interval(0, 100)
    assert low < 1e-12 and high < 0.05


def test_aggregate_fractions_sum_to_one():
    runs = [RunVerdict(CONVERGED_VERDICT, i, 0) for i in range(50)] + [
        RunVerdict(BIPOLAR, i, 0) for i in range(50)
    ]
    report = aggregate_verdicts(runs)
    assert report.total == 100
    assert abs(sum(report.fractions.values()) - 1.0) < 1e-12
    assert report.fractions[CONVERGED_VERDICT] == 0.5
    assert report.counts[BIPOLAR] == 50


def test_aggregate_full_convergence_ci():
    runs = [RunVerdict(CONVERGED_VERDICT, i, 0) for i in range(100)]
    report = aggregate_verdicts(runs)
    assert report.fractions[CONVERGED_VERDICT] == 1.0
    assert report.wilson[CONVERGED_VERDICT][0] > 0.96
    assert report.fractions["diverged_max_abs"] == 0.0


def test_aggregate_requires_runs():
    with pytest.raises(ValueError):
        aggregate_verdicts([])
