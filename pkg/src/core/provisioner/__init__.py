from .allocator import (
    build_lp,
    check_feasibility,
    greedy_allocate,
    hercules_allocate,
    nh_allocate,
    priority_allocate,
    round_and_repair,
    solve_lp,
)
from .cluster_sim import RefreshSample, allocate, refresh_efficiency, run_cluster_sim, savings
from .entities import (
    AllocationMatrix,
    ClusterState,
    IntervalRecord,
    LPInstance,
    Policy,
    ProvisionSummary,
    ProvisionTimeline,
    RankBy,
    RMode,
    ViolationEvent,
)

__all__ = [
    "AllocationMatrix",
    "ClusterState",
    "IntervalRecord",
    "LPInstance",
    "Policy",
    "ProvisionSummary",
    "ProvisionTimeline",
    "RMode",
    "RankBy",
    "RefreshSample",
    "ViolationEvent",
    "allocate",
    "build_lp",
    "check_feasibility",
    "greedy_allocate",
    "hercules_allocate",
    "nh_allocate",
    "priority_allocate",
    "refresh_efficiency",
    "round_and_repair",
    "run_cluster_sim",
    "savings",
    "solve_lp",
]
