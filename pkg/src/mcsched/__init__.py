"""Coordinated scheduling for multi-cloud radio access networks.

Network instances and SINR utilities (:mod:`.network`), conflict graphs and
schedule validation (:mod:`.conflict`), exact and greedy MWIS solvers
(:mod:`.mwis`), the distributed cloud-agent protocols (:mod:`.distributed`)
and parameter sweeps (:mod:`.experiment`).
"""

from .conflict import Association, ConflictGraph, Regime, Schedule, Verdict, build_graph, is_independent, validate_schedule
from .distributed import Bus, CloudAgent, ConflictSet, ProtocolMessage, bus_step, run_heuristic_distributed, run_optimal_distributed
from .errors import ConfigurationError, InfeasibleError, ProtocolError, SchedulingError, UsageError
from .experiment import ExperimentSpec, emit_plots, run_experiment, summarize
from .mwis import brute_force_oracle, exact_mwis, greedy_mwis
from .network import (ChannelParams, Dimensions, NetworkInstance, UtilityTensor, compute_sinr, compute_utilities,
                      generate_instance)

__version__ = "0.1.0"

__all__ = [
    "Association", "Bus", "ChannelParams", "CloudAgent", "ConfigurationError", "ConflictGraph", "ConflictSet",
    "Dimensions", "ExperimentSpec", "InfeasibleError", "NetworkInstance", "ProtocolError", "ProtocolMessage",
    "Regime", "Schedule", "SchedulingError", "UsageError", "UtilityTensor", "Verdict", "brute_force_oracle",
    "build_graph", "bus_step", "compute_sinr", "compute_utilities", "emit_plots", "exact_mwis",
    "generate_instance", "greedy_mwis", "is_independent", "run_experiment", "run_heuristic_distributed",
    "run_optimal_distributed", "summarize", "validate_schedule",
]
