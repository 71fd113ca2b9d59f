from .config import BUILTIN_SCENARIO_DIR, Config

__all__ = ["BUILTIN_SCENARIO_DIR", "Config"]
