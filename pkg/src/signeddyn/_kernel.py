"""Inner simulation loop, compiled with numba when available.

A single function advances the state through a block of slots using
pre-drawn uniforms, so the fast path and the interpreted fallback execute
literally the same code and produce bit-identical trajectories.  Per-node
recommendation sums are accumulated in sorted-arc order to match the
slot-by-slot reference implementation exactly.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

RUNNING = 0
OVERFLOW = 1
DIVERGED_MAX = 2
DIVERGED_GAP = 3
GAP_FLOOR = 4

POLICY_PER_ARC = 0
POLICY_GOSSIP = 1
POLICY_FULL = 2


def block_loop(
    s,
    t_start,
    slot_graph,
    g_off,
    g_cnt,
    arc_src,
    arc_dst,
    arc_neg,
    arc_prob,
    policy_code,
    u_arc,
    u_b,
    u_d,
    q_b,
    q_d,
    alpha,
    beta,
    relative,
    cap,
    m_threshold,
    gap_threshold,
    gap_floor,
    early_stop,
    rec_stride,
    first_m,
    first_gap,
    first_floor,
    rec_slots,
    rec_states,
    rec_max_abs,
    rec_smax,
    rec_smin,
    rec_gap,
    out_b,
    out_d,
    hp,
    hm,
):
    """Run up to ``len(u_b)`` slots starting at ``t_start``; ``s`` is updated in place.

    Returns ``(n_rec, done, status, first_m, first_gap, first_floor)`` where
    ``done`` is the number of updates performed; on a detector or overflow
    break the state corresponds to slot ``t_start + done``.
    """
    n_slots = u_b.shape[0]
    n = s.shape[0]
    n_rec = 0
    status = RUNNING
    done = 0
    for k in range(n_slots):
        t = t_start + k

        smax = s[0]
        smin = s[0]
        for i in range(1, n):
            if s[i] > smax:
                smax = s[i]
            if s[i] < smin:
                smin = s[i]
        mabs = smax if smax > -smin else -smin
        gap = smax - smin

        if t % rec_stride == 0:
            rec_slots[n_rec] = t
            for i in range(n):
                rec_states[n_rec, i] = s[i]
            rec_max_abs[n_rec] = mabs
            rec_smax[n_rec] = smax
            rec_smin[n_rec] = smin
            rec_gap[n_rec] = gap
            n_rec += 1

        if m_threshold > 0.0 and first_m < 0 and mabs >= m_threshold:
            first_m = t
        if gap_threshold > 0.0 and first_gap < 0 and gap >= gap_threshold:
            first_gap = t
        if gap_floor > 0.0 and first_floor < 0 and gap < gap_floor:
            first_floor = t

        if mabs > cap:
            status = OVERFLOW
            break
        if early_stop:
            if m_threshold > 0.0 and first_m >= 0:
                status = DIVERGED_MAX
                break
            if gap_threshold > 0.0 and first_gap >= 0:
                status = DIVERGED_GAP
                break
            if gap_floor > 0.0 and first_floor >= 0:
                status = GAP_FLOOR
                break

        B = 1.0 if u_b[k] < q_b[k] else 0.0
        D = 1.0 if u_d[k] < q_d[k] else 0.0
        out_b[k] = 1 if B == 1.0 else 0
        out_d[k] = 1 if D == 1.0 else 0

        if B != 0.0 or D != 0.0:
            gi = slot_graph[k]
            off = g_off[gi]
            m = g_cnt[gi]
            for i in range(n):
                hp[i] = 0.0
                hm[i] = 0.0
            if policy_code == POLICY_PER_ARC:
                for a in range(m):
                    if u_arc[k, a] < arc_prob[off + a]:
                        j = arc_src[off + a]
                        i = arc_dst[off + a]
                        if arc_neg[off + a] == 0:
                            hp[i] += s[j] - s[i]
                        elif relative:
                            hm[i] += s[i] - s[j]
                        else:
                            hm[i] -= s[i] + s[j]
            elif policy_code == POLICY_GOSSIP:
                if m > 0:
                    a = int(u_arc[k, 0] * m)
                    if a >= m:
                        a = m - 1
                    j = arc_src[off + a]
                    i = arc_dst[off + a]
                    if arc_neg[off + a] == 0:
                        hp[i] += s[j] - s[i]
                    elif relative:
                        hm[i] += s[i] - s[j]
                    else:
                        hm[i] -= s[i] + s[j]
            else:
                for a in range(m):
                    j = arc_src[off + a]
                    i = arc_dst[off + a]
                    if arc_neg[off + a] == 0:
                        hp[i] += s[j] - s[i]
                    elif relative:
                        hm[i] += s[i] - s[j]
                    else:
                        hm[i] -= s[i] + s[j]
            for i in range(n):
                s[i] = s[i] + alpha * B * hp[i] + beta * D * hm[i]

        done = k + 1
    return n_rec, done, status, first_m, first_gap, first_floor


def one_step_sums(
    s0,
    g_src,
    g_dst,
    g_neg,
    g_prob,
    policy_code,
    u_arc,
    u_b,
    u_d,
    q_b,
    q_d,
    alpha,
    beta,
    relative,
    acc,
    acc_sq,
    hp,
    hm,
):
    """Accumulate one-step outcomes from a fixed state across independent draws.

    Each slot of the pre-drawn uniforms is treated as one Monte Carlo draw of
    ``s(1)`` from ``s0``; running sums and sums of squares land in ``acc`` and
    ``acc_sq``.
    """
    n_draws = u_b.shape[0]
    n = s0.shape[0]
    m = g_src.shape[0]
    for k in range(n_draws):
        B = 1.0 if u_b[k] < q_b[k] else 0.0
        D = 1.0 if u_d[k] < q_d[k] else 0.0
        for i in range(n):
            hp[i] = 0.0
            hm[i] = 0.0
        if policy_code == POLICY_PER_ARC:
            for a in range(m):
                if u_arc[k, a] < g_prob[a]:
                    j = g_src[a]
                    i = g_dst[a]
                    if g_neg[a] == 0:
                        hp[i] += s0[j] - s0[i]
                    elif relative:
                        hm[i] += s0[i] - s0[j]
                    else:
                        hm[i] -= s0[i] + s0[j]
        elif policy_code == POLICY_GOSSIP:
            if m > 0:
                a = int(u_arc[k, 0] * m)
                if a >= m:
                    a = m - 1
                j = g_src[a]
                i = g_dst[a]
                if g_neg[a] == 0:
                    hp[i] += s0[j] - s0[i]
                elif relative:
                    hm[i] += s0[i] - s0[j]
                else:
                    hm[i] -= s0[i] + s0[j]
        else:
            for a in range(m):
                j = g_src[a]
                i = g_dst[a]
                if g_neg[a] == 0:
                    hp[i] += s0[j] - s0[i]
                elif relative:
                    hm[i] += s0[i] - s0[j]
                else:
                    hm[i] -= s0[i] + s0[j]
        for i in range(n):
            v = s0[i] + alpha * B * hp[i] + beta * D * hm[i]
            acc[i] += v
            acc_sq[i] += v * v


if numba is not None:
    block_loop_fast = numba.njit(cache=True)(block_loop)
    one_step_sums_fast = numba.njit(cache=True)(one_step_sums)
else:  # pragma: no cover
    block_loop_fast = block_loop
    one_step_sums_fast = one_step_sums
