from .sim_entity import AnalyticResult, CrossValidation, LatencyBoundResult, SimReport

__all__ = ["AnalyticResult", "CrossValidation", "LatencyBoundResult", "SimReport"]
