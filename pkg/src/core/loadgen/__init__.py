from .entities import LoadTrace, Query, QuerySizeDistribution, QueryStream
from .query_generator import gen_query_stream, sample_hot_hits, sample_pooling
from .trace_generator import (
    estimate_overprovision_rate,
    export_trace,
    format_trace,
    gen_diurnal_trace,
    ingest_trace,
    interval_loads,
    mix_traces,
    parse_trace,
    scale_trace,
)

__all__ = [
    "LoadTrace",
    "Query",
    "QuerySizeDistribution",
    "QueryStream",
    "estimate_overprovision_rate",
    "export_trace",
    "format_trace",
    "gen_diurnal_trace",
    "gen_query_stream",
    "ingest_trace",
    "interval_loads",
    "mix_traces",
    "parse_trace",
    "sample_hot_hits",
    "sample_pooling",
    "scale_trace",
]
