"""Monte Carlo batches over seeds, plus the file artifacts they emit.

A batch executes ``num_runs`` independent trajectories whose substreams are
derived from ``(seed, run index)``, classifies each into a verdict and
aggregates fractions with Wilson intervals.  Trajectories are classified
and discarded one at a time, so memory stays flat in the number of runs.

Artifacts are plain CSV and key-value text; identical configurations
produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .dynamics import TrajectoryRecord, run
from .metrics import (
    VERDICT_KINDS,
    RunVerdict,
    VerdictReport,
    aggregate_verdicts,
    classify_run,
)
from .scenario import ScenarioConfig


def iter_runs(
    cfg: ScenarioConfig, use_fast: bool | None = None, block_slots: int = 8192
) -> Iterator[TrajectoryRecord]:
    """Execute the batch lazily, one trajectory at a time."""
    for run_index in range(cfg.num_runs):
        yield run(cfg, run_index, use_fast=use_fast, block_slots=block_slots)


def run_montecarlo(
    cfg: ScenarioConfig,
    partition=None,
    use_fast: bool | None = None,
    out_dir: str | Path | None = None,
    per_run_files: bool = False,
    observer: Callable[[TrajectoryRecord], None] | None = None,
) -> VerdictReport:
    """Run the batch and aggregate per-run verdicts.

    Per-run failures are recorded as inconclusive verdicts without aborting
    the batch.  When ``out_dir`` is given the verdict report and per-run CSV
    are written there (plus trajectory/metric CSVs with ``per_run_files``).
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    verdicts: list[RunVerdict] = []
    failures: list[str] = []
    for run_index in range(cfg.num_runs):
        try:
            traj = run(cfg, run_index, use_fast=use_fast)
            if observer is not None:
                observer(traj)
            verdicts.append(classify_run(traj, cfg.detect, partition))
            if out is not None and per_run_files:
                write_trajectory_csv(traj, out / f"run{run_index:04d}_states.csv")
                write_metrics_csv(traj, out / f"run{run_index:04d}_metrics.csv")
        except Exception as exc:  # per-run isolation; config errors raise earlier
            failures.append(f"run {run_index}: {exc}")
            verdicts.append(RunVerdict("inconclusive", run_index, cfg.seed))
    report = aggregate_verdicts(verdicts)
    if out is not None:
        (out / "report.txt").write_text(render_report(report, cfg, failures), encoding="utf-8")
        write_verdicts_csv(report, cfg.schedule.n, out / "verdicts.csv")
    return report


def _fmt(value: float) -> str:
    return repr(float(value))


def write_trajectory_csv(traj: TrajectoryRecord, path: str | Path) -> None:
    """One row per recorded (slot, node) pair: ``t,node,state``."""
    lines = ["t,node,state"]
    for idx, slot in enumerate(traj.slots):
        for node in range(traj.n):
            lines.append(f"{int(slot)},{node},{_fmt(traj.states[idx, node])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_metrics_csv(traj: TrajectoryRecord, path: str | Path) -> None:
    """Per recorded slot: ``t,M,H,h,gap``."""
    lines = ["t,M,H,h,gap"]
    for idx, slot in enumerate(traj.slots):
        lines.append(
            f"{int(slot)},{_fmt(traj.max_abs[idx])},{_fmt(traj.state_max[idx])},"
            f"{_fmt(traj.state_min[idx])},{_fmt(traj.gap[idx])}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_verdicts_csv(report: VerdictReport, n: int, path: str | Path) -> None:
    """Per run: ``run,seed,verdict,first_cross,limit_0..limit_{n-1}``."""
    header = ["run", "seed", "verdict", "first_cross"] + [f"limit_{i}" for i in range(n)]
    lines = [",".join(header)]
    for verdict in report.runs:
        row = [
            str(verdict.run_index),
            str(verdict.seed),
            verdict.kind,
            "" if verdict.first_cross is None else str(verdict.first_cross),
        ]
        if verdict.limits is not None:
            row.extend(_fmt(v) for v in verdict.limits)
        else:
            row.extend([""] * n)
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_report(
    report: VerdictReport, cfg: ScenarioConfig | None = None, failures: Sequence[str] = ()
) -> str:
    """Machine-parsable key-value summary of a batch."""
    lines = [f"runs = {report.total}"]
    if cfg is not None:
        lines.append(f"seed = {cfg.seed}")
        lines.append(f"horizon = {cfg.horizon}")
    for kind in VERDICT_KINDS:
        low, high = report.wilson[kind]
        lines.append(f"verdict.{kind}.count = {report.counts[kind]}")
        lines.append(f"verdict.{kind}.fraction = {_fmt(report.fractions[kind])}")
        lines.append(f"verdict.{kind}.wilson_low = {_fmt(low)}")
        lines.append(f"verdict.{kind}.wilson_high = {_fmt(high)}")
    ys = [v.y_star for v in report.runs if v.y_star is not None]
    if ys:
        lines.append(f"bipolar.y_star.mean_abs = {_fmt(float(np.mean(np.abs(ys))))}")
    for failure in failures:
        lines.append(f"error = {failure}")
    return "\n".join(lines) + "\n"
