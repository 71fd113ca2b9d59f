from .base_service import BaseService
from .config_service import ConfigService
from .evolve_service import EvolveService
from .profile_service import ProfileService
from .serve_service import ServeService
from .trace_service import TraceService

__all__ = [
    "BaseService",
    "ConfigService",
    "EvolveService",
    "ProfileService",
    "ServeService",
    "TraceService",
]
