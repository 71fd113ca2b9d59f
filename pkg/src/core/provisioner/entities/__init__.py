from .provision_entity import (
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
    "ViolationEvent",
]
