from .partition_entity import (
    AccessProfile,
    DenseSubgraph,
    PartitionPlan,
    TableDescriptor,
    TableProfile,
    harmonic,
)

__all__ = [
    "AccessProfile",
    "DenseSubgraph",
    "PartitionPlan",
    "TableDescriptor",
    "TableProfile",
    "harmonic",
]
