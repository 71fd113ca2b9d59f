from .experiment_schema import (
    POLICIES,
    EvolutionSchema,
    ExperimentConfig,
    WorkloadTraceSchema,
    load_experiment,
    resolve_config_path,
)

__all__ = [
    "POLICIES",
    "EvolutionSchema",
    "ExperimentConfig",
    "WorkloadTraceSchema",
    "load_experiment",
    "resolve_config_path",
]
