from .query_entity import Query, QuerySizeDistribution, QueryStream
from .trace_entity import LoadTrace

__all__ = ["LoadTrace", "Query", "QuerySizeDistribution", "QueryStream"]
