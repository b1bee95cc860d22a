"""Long-term binary freshness of flat and clustered gossip networks.

Exact values (closed forms plus a generic renewal recursion), event-driven
Monte Carlo validation, and a config-driven experiment runner.
"""

from .core import (
    DC_POLICIES,
    Clustered,
    Flat,
    FreshnessValue,
    GossipPolicy,
    NetworkSpec,
    Rates,
    per_stale_rate,
    stale_rate_fn,
    validate,
)
from .analytic import (
    ClusteredBreakdown,
    RecursionTrace,
    closed_clustered,
    closed_flat,
    clustered_freshness,
    divisors,
    flat_freshness,
    freshness_dc_norc,
    freshness_dc_rc,
    freshness_fc_allrc,
    freshness_fc_norc,
    optimal_cluster_size,
    oracle_flat,
    renewal_freshness,
)
from .simulator import (
    CycleOutcome,
    DecompositionReport,
    FreshnessEstimate,
    SimState,
    TrajectorySim,
    decomposition_check,
    estimate_freshness_cycles,
    estimate_freshness_time,
    simulate_cycle,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    OptimalKReport,
    ResultRow,
    emit_plot_data,
    read_csv,
    report_optimal_k,
    run_experiment,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DC_POLICIES",
    "Clustered",
    "ClusteredBreakdown",
    "ConfigError",
    "CycleOutcome",
    "DecompositionReport",
    "ExperimentConfig",
    "Flat",
    "FreshnessEstimate",
    "FreshnessValue",
    "GossipPolicy",
    "NetworkSpec",
    "OptimalKReport",
    "Rates",
    "RecursionTrace",
    "ResultRow",
    "SimState",
    "TrajectorySim",
    "closed_clustered",
    "closed_flat",
    "clustered_freshness",
    "decomposition_check",
    "divisors",
    "emit_plot_data",
    "estimate_freshness_cycles",
    "estimate_freshness_time",
    "flat_freshness",
    "freshness_dc_norc",
    "freshness_dc_rc",
    "freshness_fc_allrc",
    "freshness_fc_norc",
    "optimal_cluster_size",
    "oracle_flat",
    "per_stale_rate",
    "read_csv",
    "renewal_freshness",
    "report_optimal_k",
    "run_experiment",
    "simulate_cycle",
    "stale_rate_fn",
    "validate",
    "write_csv",
]
