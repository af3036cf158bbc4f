"""Command-line interface.

Subcommands: ``analyze`` (structural report of a graph or scenario
environment), ``run`` (single trajectory), ``montecarlo`` (seed batch),
``suite`` (verification suites), ``oracle`` (sampled one-step mean vs the
exact expectation).  Exit codes: 0 pass/success, 1 fail, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .dynamics import ModelError, StateVector, one_step_expectation_oracle, one_step_mc, run
from .graphs import (
    ALL,
    NEGATIVE_ONLY,
    POSITIVE_ONLY,
    GraphParseError,
    SignedDigraph,
    has_center_node,
    is_strongly_balanced,
    is_strongly_connected,
    is_weakly_connected,
    load_graph,
    positive_cluster_partition,
)
from .montecarlo import (
    render_report,
    run_montecarlo,
    write_metrics_csv,
    write_trajectory_csv,
)
from .sampling import PolicyError
from .scenario import ConfigError, dump_scenario, load_scenario
from .schedule import GraphSchedule, check_assumptions, is_sign_consistent, total_graph
from .suites import SUITE_IDS, AssumptionViolated, run_suite

_CONFIG_ERRORS = (ConfigError, GraphParseError, PolicyError, ModelError, AssumptionViolated)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signeddyn",
        description="Simulate and verify belief dynamics on signed random networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structural report of a graph file or scenario environment")
    p.add_argument("path")
    p.add_argument("--window", type=int, default=1, help="union window length K for assumption checks")
    p.add_argument("--horizon", type=int, default=None, help="scan horizon for assumption checks")

    p = sub.add_parser("run", help="execute a single trajectory of a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", default=None, help="directory for trajectory and metric CSVs")
    p.add_argument("--run-index", type=int, default=0)
    p.add_argument("--print-config", action="store_true", help="echo the resolved configuration and exit")

    p = sub.add_parser("montecarlo", help="run a scenario over many seeds and aggregate verdicts")
    p.add_argument("scenario")
    p.add_argument("--runs", type=int, default=None, help="override run.num_runs")
    p.add_argument("--out", default=None)
    p.add_argument("--per-run-files", action="store_true")

    p = sub.add_parser("suite", help="run one verification suite, or all of them")
    p.add_argument("suite_id", metavar="id", help=f"one of {', '.join(SUITE_IDS)}, or 'all'")
    p.add_argument("--out", default=None, help="directory for evidence bundles")

    p = sub.add_parser("oracle", help="compare sampled one-step means against the exact expectation")
    p.add_argument("scenario", help="scenario whose graph, model and policy define the fixture")
    p.add_argument("--draws", type=int, default=200_000)

    return parser


def _analyze(args) -> int:
    path = Path(args.path)
    if path.suffix == ".sg":
        schedule = GraphSchedule.static(load_graph(path))
        policy = None
    else:
        try:
            cfg = load_scenario(path)
            schedule, policy = cfg.schedule, cfg.policy
        except ConfigError:
            schedule = GraphSchedule.static(load_graph(path))
            policy = None

    print(f"schedule: kind={schedule.kind} n={schedule.n} graphs={len(schedule.graphs)}")
    consistent, conflict = is_sign_consistent(schedule, args.horizon)
    print(f"sign consistent: {consistent}" + (f" (conflict at arc {conflict})" if conflict else ""))
    if consistent:
        g = total_graph(schedule, args.horizon).graph
        print(f"total graph: {g.arc_count} arcs ({g.positive_arc_count()} positive, "
              f"{g.negative_arc_count()} negative)")
        partition = positive_cluster_partition(g)
        print(f"positive clusters ({partition.count}): "
              + " ".join("{" + ",".join(map(str, c)) + "}" for c in partition.clusters))
        balance = is_strongly_balanced(g)
        if balance.vacuous:
            print("strongly balanced: true (vacuous; no negative arcs)")
        elif balance.balanced:
            v1, v2 = balance.bipartition
            print(f"strongly balanced: true  V1={{{','.join(map(str, v1))}}} "
                  f"V2={{{','.join(map(str, v2))}}}")
        else:
            print("strongly balanced: false")
        for label, sel in (("all", ALL), ("positive", POSITIVE_ONLY), ("negative", NEGATIVE_ONLY)):
            print(f"{label} subgraph: strongly_connected={is_strongly_connected(g, sel)} "
                  f"weakly_connected={is_weakly_connected(g, sel)} "
                  f"center={has_center_node(g, sel)}")
    report = check_assumptions(schedule, policy, args.window, args.horizon)
    print(f"assumptions (K={report.window}, horizon={report.horizon}, exact={report.exact}):")
    for aid, entry in report.entries.items():
        witness = f"  [{entry.witness}]" if entry.witness else ""
        print(f"  {aid}: {entry.status}{witness}")
    return 0


def _run(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.print_config:
        sys.stdout.write(dump_scenario(cfg))
        return 0
    traj = run(cfg, run_index=args.run_index)
    print(f"termination: {traj.termination} at t={traj.termination_slot} ({traj.detail})")
    print(f"final max_abs={traj.max_abs[-1]!r} gap={traj.gap[-1]!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, out / "trajectory.csv")
        write_metrics_csv(traj, out / "metrics.csv")
        print(f"wrote {out / 'trajectory.csv'} and {out / 'metrics.csv'}")
    return 0


def _montecarlo(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.runs is not None:
        from dataclasses import replace

        cfg = replace(cfg, num_runs=args.runs)
    report = run_montecarlo(cfg, out_dir=args.out, per_run_files=args.per_run_files)
    sys.stdout.write(render_report(report, cfg))
    return 0


def _suite(args) -> int:
    ids = SUITE_IDS if args.suite_id == "all" else (args.suite_id,)
    failed = 0
    for sid in ids:
        result = run_suite(sid, out_dir=args.out)
        print(f"{result.summary()}  {result.messages[0]}")
        failed += not result.passed
    return 1 if failed else 0


def _oracle(args) -> int:
    cfg = load_scenario(args.scenario)
    g = cfg.schedule.graph_at(0)
    b = cfg.attention_positive.prob(0)
    d = cfg.attention_negative.prob(0)
    if cfg.init.kind == "explicit":
        s0 = np.asarray(cfg.init.values)
    else:
        from .dynamics import build_initial_state
        from .sampling import RandomStream

        s0 = build_initial_state(cfg, RandomStream(cfg.seed, 0, max(g.arc_count, 1)))
    exact = one_step_expectation_oracle(StateVector(0, s0), g, cfg.policy, b, d, cfg.model)
    mean, se = one_step_mc(g, cfg.policy, s0, b, d, cfg.model, args.draws, cfg.seed)
    margin = 4.0 * se + 1e-12 * (1.0 + np.abs(exact))
    ok = bool(np.all(np.abs(mean - exact) <= margin))
    for i in range(len(s0)):
        print(f"node {i}: exact={exact[i]!r} sampled={mean[i]!r} stderr={se[i]!r}")
    print(f"oracle agreement (4 standard errors): {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "analyze": _analyze,
        "run": _run,
        "montecarlo": _montecarlo,
        "suite": _suite,
        "oracle": _oracle,
    }
    try:
        return handlers[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
