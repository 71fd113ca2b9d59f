from .entities.partition_entity import AccessProfile, PartitionPlan, TableProfile, harmonic
from .partitioner import (
    Partitioner,
    accel_feasible,
    build_access_profile,
    enumerate_strategies,
    partition_model,
    select_hot_rows,
)

__all__ = [
    "AccessProfile",
    "PartitionPlan",
    "Partitioner",
    "TableProfile",
    "accel_feasible",
    "build_access_profile",
    "enumerate_strategies",
    "harmonic",
    "partition_model",
    "select_hot_rows",
]
