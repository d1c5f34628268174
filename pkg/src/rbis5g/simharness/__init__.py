"""Deterministic testbed simulation, edge measurement and result statistics."""

from rbis5g.simharness.engine import (
    SimulationReport,
    run_scenario,
    skew_series_from_tuples,
    sweep_filter_sizes,
)
from rbis5g.simharness.scenario import (
    GrandmasterConfig,
    ScenarioConfig,
    config_from_dict,
    load_config,
    parse_config,
)
from rbis5g.simharness.stats import (
    EdgeMeasurement,
    StatsSummary,
    coverage_check,
    measure_edge_offset,
    stats_summary,
)

__all__ = [
    "EdgeMeasurement", "GrandmasterConfig", "ScenarioConfig", "SimulationReport", "StatsSummary",
    "config_from_dict", "coverage_check", "load_config", "measure_edge_offset", "parse_config",
    "run_scenario", "skew_series_from_tuples", "stats_summary", "sweep_filter_sizes",
]
