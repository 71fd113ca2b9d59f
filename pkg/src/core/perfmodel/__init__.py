from .cost_model import (
    Utilization,
    accel_stage_latencies,
    dense_latency,
    power_draw,
    sparse_latency,
    validate_config,
)
from .entities import (
    DEFAULT_CALIBRATION,
    AccelConfig,
    Calibration,
    HostConfig,
    SchedConfig,
    SchedulingStrategy,
    StageLatency,
    StrategyKind,
)
from .pipeline_model import PipelineModel, PipelinePath, Stage, build_pipeline

__all__ = [
    "DEFAULT_CALIBRATION",
    "AccelConfig",
    "Calibration",
    "HostConfig",
    "PipelineModel",
    "PipelinePath",
    "SchedConfig",
    "SchedulingStrategy",
    "Stage",
    "StageLatency",
    "StrategyKind",
    "Utilization",
    "accel_stage_latencies",
    "build_pipeline",
    "dense_latency",
    "power_draw",
    "sparse_latency",
    "validate_config",
]
