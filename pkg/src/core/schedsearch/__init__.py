from .entities import EfficiencyTable, EfficiencyTuple, Evaluation, SearchTrace, TraceStep
from .evaluator import AnalyticEvaluator, Evaluator, EvaluatorKind, SimulationEvaluator, make_evaluator
from .gradient_search import brute_force_search, candidate_moves, gradient_search, surface
from .profiler import profile_all, profile_pair
from .search_space import SearchSpace, geometric_batches
from .unimodality import axis_slices, is_unimodal, surface_is_unimodal

__all__ = [
    "AnalyticEvaluator",
    "EfficiencyTable",
    "EfficiencyTuple",
    "Evaluation",
    "Evaluator",
    "EvaluatorKind",
    "SearchSpace",
    "SearchTrace",
    "SimulationEvaluator",
    "TraceStep",
    "axis_slices",
    "brute_force_search",
    "candidate_moves",
    "geometric_batches",
    "gradient_search",
    "is_unimodal",
    "make_evaluator",
    "profile_all",
    "profile_pair",
    "surface",
    "surface_is_unimodal",
]
