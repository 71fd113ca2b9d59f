from .entities import AnalyticResult, CrossValidation, LatencyBoundResult, SimReport
from .latency_bound import EvalMode, analytic_eval, cross_validate, measure_latency_bounded_qps
from .server_simulator import ServerSimulator, simulate

__all__ = [
    "AnalyticResult",
    "CrossValidation",
    "EvalMode",
    "LatencyBoundResult",
    "ServerSimulator",
    "SimReport",
    "analytic_eval",
    "cross_validate",
    "measure_latency_bounded_qps",
    "simulate",
]
