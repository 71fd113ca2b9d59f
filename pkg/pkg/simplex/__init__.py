from .simplex import LPResult, LPStatus, check_optimality, solve

__all__ = ["LPResult", "LPStatus", "check_optimality", "solve"]
