from .model_entity import AttentionKind, IntRange, ModelSpec, SizeClass
from .server_entity import GB, AccelSpec, CpuSpec, MemorySpec, ServerSpec

__all__ = [
    "GB",
    "AccelSpec",
    "AttentionKind",
    "CpuSpec",
    "IntRange",
    "MemorySpec",
    "ModelSpec",
    "ServerSpec",
    "SizeClass",
]
