"""Derived quantities, detectors and per-run verdict classification.

Per-slot scalars: the largest state magnitude, the state maximum and
minimum, and their gap.  Detectors turn a recorded trajectory into empirical
statements: existence of per-node limits, bipolar (mirror-image) clustering
across a bipartition, threshold crossings of the magnitude or the gap, and
the no-survivor pattern where every node (or node pair) individually
crosses.  Aggregation over seeds reports fractions with Wilson confidence
intervals, the finite-sample stand-in for almost-sure statements.

Window coefficients combine the interaction lower bound, the contraction
rate ``rho_star`` and the attention schedules over ``k0``-slot windows; the
convergence side grows with the product of positive-attention probabilities
while the disruption side grows with the chance of any negative-attention
event in the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dynamics import NUMERIC_OVERFLOW, TrajectoryRecord
from .sampling import AttentionSchedule

CONVERGED_VERDICT = "converged"
WEAK_CONSENSUS = "weak_consensus"
BIPOLAR = "bipolar_clustered"
ALL_ZERO = "all_zero"
DIVERGED_MAX_ABS = "diverged_max_abs"
DIVERGED_GAP = "diverged_gap"
INCONCLUSIVE = "inconclusive"

VERDICT_KINDS = (
    CONVERGED_VERDICT,
    WEAK_CONSENSUS,
    BIPOLAR,
    ALL_ZERO,
    DIVERGED_MAX_ABS,
    DIVERGED_GAP,
    INCONCLUSIVE,
)


class InvalidAlpha(ValueError):
    """The contraction rate is non-positive for the supplied alpha."""


def compute_metrics(state) -> tuple[float, float, float, float]:
    """(max |s_i|, max s_i, min s_i, gap) of a state vector or raw array."""
    values = getattr(state, "values", state)
    smax = float(np.max(values))
    smin = float(np.min(values))
    return max(smax, -smin), smax, smin, smax - smin


@dataclass(frozen=True)
class DerivedConstants:
    """Parameter combinations the convergence and divergence bounds use.

    ``gamma_star = 1 - (alpha + beta)(n - 1)`` and
    ``lambda_star = 1 - alpha(n - 1)`` are single-slot contraction factors,
    ``rho_star = min(alpha, 1 - (n - 1) alpha)`` the per-slot mixing rate,
    and ``k0 = (2n - 3) K`` the window length over which mixing propagates
    through the network.
    """

    n: int
    window: int
    alpha: float
    beta: float

    @property
    def gamma_star(self) -> float:
        return 1.0 - (self.alpha + self.beta) * (self.n - 1)

    @property
    def lambda_star(self) -> float:
        return 1.0 - self.alpha * (self.n - 1)

    @property
    def rho_star(self) -> float:
        return min(self.alpha, 1.0 - (self.n - 1) * self.alpha)

    @property
    def k0(self) -> int:
        return (2 * self.n - 3) * self.window


@dataclass(frozen=True)
class WindowCoefficients:
    """Per-window contraction/disruption coefficients and attention summaries."""

    m: int
    x: float  # expected contraction weight of the window
    y: float  # worst-case disruption weight of the window
    j: float  # product of positive-attention probabilities
    w: float  # sum of negative-attention probabilities


def window_coefficients(
    n: int,
    window: int,
    alpha: float,
    beta: float,
    p_star: float,
    attention_positive: AttentionSchedule,
    attention_negative: AttentionSchedule,
    m: int,
) -> WindowCoefficients:
    """Coefficients of window ``m`` (slots ``[m*k0, (m+1)*k0)``).

    Raises :class:`InvalidAlpha` unless ``0 < alpha < 1/(n-1)`` so the mixing
    rate ``rho_star`` is positive.
    """
    consts = DerivedConstants(n, window, alpha, beta)
    if consts.rho_star <= 0.0:
        raise InvalidAlpha(f"need 0 < alpha < 1/(n-1); alpha={alpha}, n={n}")
    k0 = consts.k0
    t0 = m * k0
    b = attention_positive.probs(t0, t0 + k0)
    d = attention_negative.probs(t0, t0 + k0)
    bd_prod = 1.0
    keep_prod = 1.0
    j = 1.0
    w = 0.0
    for k in range(k0):
        bd_prod *= b[k] * (1.0 - d[k])
        keep_prod *= 1.0 - d[k]
        j *= b[k]
        w += d[k]
    x = p_star ** (n - 1) * consts.rho_star**k0 / 2.0 * bd_prod
    y = (1.0 + 2.0 * beta * (n - 1)) ** k0 * (1.0 - keep_prod)
    return WindowCoefficients(m=m, x=x, y=y, j=j, w=w)


def detect_convergence(
    traj: TrajectoryRecord, window: int, eps: float
) -> np.ndarray | None:
    """Per-node limits when every node's trailing oscillation is below eps.

    The window is measured in slots; limits are trailing-window means, which
    damp residual oscillation better than final values.
    """
    if len(traj.slots) < 2:
        return None
    lo = traj.slots[-1] - window
    tail = traj.states[traj.slots > lo]
    if len(tail) < 2:
        return None
    osc = tail.max(axis=0) - tail.min(axis=0)
    if np.all(osc < eps):
        return tail.mean(axis=0)
    return None


@dataclass(frozen=True)
class BipolarResult:
    match: bool
    y_star: float | None
    reason: str = ""


def detect_bipolar_clustering(
    limits: np.ndarray,
    partition: tuple[Sequence[int], Sequence[int]],
    eps: float,
    initial_l1: float | None = None,
) -> BipolarResult:
    """Test for the mirror-image pattern: one value on V1, its negation on V2.

    ``initial_l1`` optionally enforces the magnitude bound |y*| <= ||s(0)||_1.
    Swapping the partition sides while negating the limits leaves the outcome
    unchanged.
    """
    v1, v2 = partition
    side1 = np.asarray([limits[i] for i in v1])
    side2 = np.asarray([limits[i] for i in v2])
    if side1.max() - side1.min() > eps:
        return BipolarResult(False, None, "first side limits disagree")
    if len(side2) and side2.max() - side2.min() > eps:
        return BipolarResult(False, None, "second side limits disagree")
    y_star = float(side1.mean())
    if len(side2) and abs(side2.mean() + y_star) > eps:
        return BipolarResult(False, None, "sides are not mirror images")
    if initial_l1 is not None and abs(y_star) > initial_l1 + eps:
        return BipolarResult(False, y_star, "limit magnitude above initial l1 norm")
    return BipolarResult(True, y_star)


def detect_divergence(
    traj: TrajectoryRecord, threshold: float, mode: str = "max_abs"
) -> int | None:
    """First recorded slot whose metric reaches the threshold, if any."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if mode not in ("max_abs", "max_gap"):
        raise ValueError(f"unknown divergence mode {mode!r}")
    series = traj.max_abs if mode == "max_abs" else traj.gap
    hits = np.nonzero(series >= threshold)[0]
    return int(traj.slots[hits[0]]) if len(hits) else None


@dataclass(frozen=True)
class NoSurvivorResult:
    """First-crossing slots per node (or node pair) and the list of survivors."""

    crossings: Mapping
    survivors: tuple

    @property
    def all_crossed(self) -> bool:
        return len(self.survivors) == 0


def detect_no_survivor(
    traj: TrajectoryRecord, threshold: float, mode: str = "per_node"
) -> NoSurvivorResult:
    """Check that divergence is network-wide rather than carried by a few nodes.

    ``per_node`` finds the first recorded slot with |s_i| >= threshold for
    each node; ``per_pair`` does the same for every pairwise gap
    |s_i - s_j|.  Works off recorded states, so use stride 1 for exactness.
    """
    states = traj.states
    crossings: dict = {}
    survivors: list = []
    if mode == "per_node":
        for i in range(traj.n):
            hits = np.nonzero(np.abs(states[:, i]) >= threshold)[0]
            if len(hits):
                crossings[i] = int(traj.slots[hits[0]])
            else:
                survivors.append(i)
    elif mode == "per_pair":
        for i in range(traj.n):
            for j in range(i + 1, traj.n):
                hits = np.nonzero(np.abs(states[:, i] - states[:, j]) >= threshold)[0]
                if len(hits):
                    crossings[(i, j)] = int(traj.slots[hits[0]])
                else:
                    survivors.append((i, j))
    else:
        raise ValueError(f"unknown no-survivor mode {mode!r}")
    return NoSurvivorResult(crossings, tuple(survivors))


@dataclass(frozen=True)
class RunVerdict:
    kind: str
    run_index: int
    seed: int
    first_cross: int | None = None
    limits: tuple[float, ...] | None = None
    y_star: float | None = None
    final_gap: float = 0.0


def classify_run(
    traj: TrajectoryRecord,
    settings,
    partition: tuple[Sequence[int], Sequence[int]] | None = None,
) -> RunVerdict:
    """Mutually exclusive per-run verdict.

    Divergence (by magnitude, then gap) takes precedence; converged runs are
    refined into all-zero, bipolar (when a partition is supplied), or plain
    convergence; a closing gap without per-node limits is weak consensus.
    """
    final_gap = float(traj.gap[-1])
    m_cross = traj.first_max_abs_cross
    g_cross = traj.first_gap_cross
    if traj.termination == NUMERIC_OVERFLOW or m_cross is not None or g_cross is not None:
        if m_cross is not None and (g_cross is None or m_cross <= g_cross):
            return RunVerdict(DIVERGED_MAX_ABS, traj.run_index, traj.seed, m_cross, final_gap=final_gap)
        if g_cross is not None:
            return RunVerdict(DIVERGED_GAP, traj.run_index, traj.seed, g_cross, final_gap=final_gap)
        return RunVerdict(
            DIVERGED_MAX_ABS, traj.run_index, traj.seed, traj.termination_slot, final_gap=final_gap
        )
    window = settings.window or max(100, traj.horizon // 100)
    limits = detect_convergence(traj, window, settings.eps)
    if limits is not None:
        tup = tuple(float(v) for v in limits)
        if np.max(np.abs(limits)) < settings.zero_eps:
            return RunVerdict(ALL_ZERO, traj.run_index, traj.seed, limits=tup, final_gap=final_gap)
        if partition is not None:
            res = detect_bipolar_clustering(limits, partition, settings.cluster_eps)
            if res.match:
                return RunVerdict(
                    BIPOLAR, traj.run_index, traj.seed, limits=tup, y_star=res.y_star, final_gap=final_gap
                )
        return RunVerdict(CONVERGED_VERDICT, traj.run_index, traj.seed, limits=tup, final_gap=final_gap)
    floor = settings.gap_floor or settings.cluster_eps
    if traj.first_gap_floor is not None or final_gap < floor:
        return RunVerdict(
            WEAK_CONSENSUS, traj.run_index, traj.seed, traj.first_gap_floor, final_gap=final_gap
        )
    return RunVerdict(INCONCLUSIVE, traj.run_index, traj.seed, final_gap=final_gap)


def wilson_interval(successes: int, total: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% (by default) Wilson score interval for a binomial proportion."""
    if total <= 0:
        raise ValueError("total must be positive")
    phat = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = phat + z2 / (2.0 * total)
    radius = z * math.sqrt(phat * (1.0 - phat) / total + z2 / (4.0 * total * total))
    return (center - radius) / denom, (center + radius) / denom


@dataclass(frozen=True)
class VerdictReport:
    """Aggregate of per-run verdicts: counts, fractions and Wilson intervals."""

    runs: tuple[RunVerdict, ...]
    counts: Mapping[str, int]
    fractions: Mapping[str, float]
    wilson: Mapping[str, tuple[float, float]]

    @property
    def total(self) -> int:
        return len(self.runs)

    def fraction(self, kind: str) -> float:
        return self.fractions[kind]


def aggregate_verdicts(runs: Sequence[RunVerdict]) -> VerdictReport:
    if not runs:
        raise ValueError("need at least one run to aggregate")
    counts = {kind: 0 for kind in VERDICT_KINDS}
    for verdict in runs:
        counts[verdict.kind] += 1
    total = len(runs)
    fractions = {kind: counts[kind] / total for kind in VERDICT_KINDS}
    wilson = {kind: wilson_interval(counts[kind], total) for kind in VERDICT_KINDS}
    return VerdictReport(tuple(runs), counts, fractions, wilson)
