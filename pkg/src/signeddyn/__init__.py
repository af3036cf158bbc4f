"""Belief dynamics on dynamic signed random networks.

Simulation of synchronous state updates under positive (consensus-style)
and negative (state-reversion or relative-state-reversion) recommendations
over deterministic graph schedules with random interactions, plus the
structural analyses, detectors and Monte Carlo verification suites that
check the model's convergence, clustering and divergence behavior.
"""

from .dynamics import (
    ModelConfig,
    NumericOverflow,
    RELATIVE_STATE_REVERSION,
    STATE_REVERSION,
    StateVector,
    TooLarge,
    TrajectoryRecord,
    negative_recommendation,
    one_step_expectation_oracle,
    one_step_mc,
    positive_recommendation,
    run,
    run_reference,
    step,
)
from .graphs import (
    BalanceResult,
    EmptyWindow,
    GraphError,
    GraphParseError,
    NEGATIVE,
    POSITIVE,
    PositiveClusterPartition,
    SignConflict,
    SignedDigraph,
    format_graph,
    has_center_node,
    is_strongly_balanced,
    is_strongly_connected,
    is_weakly_connected,
    load_graph,
    parse_graph,
    positive_cluster_partition,
    random_signed_digraph,
    save_graph,
    union_graph,
)
from .metrics import (
    DerivedConstants,
    InvalidAlpha,
    RunVerdict,
    VerdictReport,
    WindowCoefficients,
    aggregate_verdicts,
    classify_run,
    compute_metrics,
    detect_bipolar_clustering,
    detect_convergence,
    detect_divergence,
    detect_no_survivor,
    wilson_interval,
    window_coefficients,
)
from .montecarlo import iter_runs, render_report, run_montecarlo
from .sampling import (
    AttentionSchedule,
    InteractionPolicy,
    InteractionSample,
    PolicyError,
    RandomStream,
    neighbor_sets,
    sample_attention,
    sample_interactions,
    summability_report,
)
from .scenario import (
    ConfigError,
    DetectorSettings,
    InitSpec,
    ParseError,
    ScenarioConfig,
    ValidationError,
    dump_scenario,
    load_scenario,
)
from .schedule import (
    AssumptionReport,
    GraphSchedule,
    check_assumptions,
    is_sign_consistent,
    total_graph,
)
from .suites import SUITE_IDS, AssumptionViolated, SuiteResult, run_suite

__version__ = "0.1.0"
