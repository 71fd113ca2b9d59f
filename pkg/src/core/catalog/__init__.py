from .catalog_manager import CatalogManager, dump_catalogs, load_catalogs
from .entities import (
    GB,
    AccelSpec,
    AttentionKind,
    CpuSpec,
    IntRange,
    MemorySpec,
    ModelSpec,
    ServerSpec,
    SizeClass,
)
from .footprint import Footprint, model_footprint

__all__ = [
    "GB",
    "AccelSpec",
    "AttentionKind",
    "CatalogManager",
    "CpuSpec",
    "Footprint",
    "IntRange",
    "MemorySpec",
    "ModelSpec",
    "ServerSpec",
    "SizeClass",
    "dump_catalogs",
    "load_catalogs",
    "model_footprint",
]
