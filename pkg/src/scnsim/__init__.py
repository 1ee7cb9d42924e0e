"""System-level simulator of a downlink small-cell network with BS sleep control.

The package models a macro cell overlaid by small cells sharing one carrier,
couples per-BS loads through interference, groups small cells into clusters
by spectral clustering on a joint distance/load similarity graph, schedules
UEs inside each cluster through the cluster head, and lets every cluster
learn when to sleep via Boltzmann-Gibbs regret learning.
"""

from .association import (
    AssociationConfig,
    LoadEstimate,
    NoCoverageError,
    associate,
    associate_all,
    update_load_estimate,
)
from .clustering import (
    ClusterPartition,
    SimilarityConfig,
    SimilarityGraph,
    build_similarity,
    jacobi_eigh,
    select_k,
    spectral_cluster,
)
from .config import (
    MODES,
    ConfigError,
    ScenarioConfig,
    default_config,
    load_config,
    validate_config,
)
from .coordination import (
    Schedule,
    UncoveredUEsError,
    elect_head,
    solve_cluster_schedule,
)
from .learning import (
    ClusterAction,
    ClusterLearner,
    CostParams,
    bg_distribution,
    build_action_set,
    cluster_cost,
    penalty_cost,
)
from .netmodel import (
    BaseStation,
    ChannelModel,
    InactiveServerError,
    NetworkConfiguration,
    UserEquipment,
    compute_loads,
    rate,
    rate_matrix,
    total_power,
    total_powers,
)
from .sim import (
    ExperimentResult,
    RunResult,
    World,
    generate_scenario,
    run_experiment,
    run_once,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AssociationConfig", "LoadEstimate", "NoCoverageError", "associate",
    "associate_all", "update_load_estimate", "ClusterPartition",
    "SimilarityConfig", "SimilarityGraph", "build_similarity", "jacobi_eigh",
    "select_k", "spectral_cluster", "MODES", "ConfigError", "ScenarioConfig",
    "default_config", "load_config", "validate_config", "Schedule",
    "UncoveredUEsError", "elect_head", "solve_cluster_schedule",
    "ClusterAction", "ClusterLearner", "CostParams", "bg_distribution",
    "build_action_set", "cluster_cost", "penalty_cost", "BaseStation",
    "ChannelModel", "InactiveServerError", "NetworkConfiguration",
    "UserEquipment", "compute_loads", "rate", "rate_matrix", "total_power",
    "total_powers", "ExperimentResult", "RunResult", "World",
    "generate_scenario", "run_experiment", "run_once", "sweep",
]
