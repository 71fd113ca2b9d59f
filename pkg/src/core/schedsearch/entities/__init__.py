from .search_entity import EfficiencyTable, EfficiencyTuple, Evaluation, SearchTrace, TraceStep

__all__ = ["EfficiencyTable", "EfficiencyTuple", "Evaluation", "SearchTrace", "TraceStep"]
