from .calibration_entity import DEFAULT_CALIBRATION, Calibration
from .sched_entity import (
    ACCEL_KINDS,
    LEFTOVER_KINDS,
    AccelConfig,
    HostConfig,
    SchedConfig,
    SchedulingStrategy,
    StageLatency,
    StrategyKind,
)

__all__ = [
    "ACCEL_KINDS",
    "DEFAULT_CALIBRATION",
    "LEFTOVER_KINDS",
    "AccelConfig",
    "Calibration",
    "HostConfig",
    "SchedConfig",
    "SchedulingStrategy",
    "StageLatency",
    "StrategyKind",
]
