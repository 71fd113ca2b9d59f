import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Literal

from src.core.catalog import ModelSpec, ServerSpec
from src.core.partitioner import Partitioner
from src.core.perfmodel import DEFAULT_CALIBRATION, Calibration, SchedConfig, StrategyKind, build_pipeline
from src.core.serversim import measure_latency_bounded_qps
from src.exception import CustomException

from .entities.search_entity import Evaluation

logger = logging.getLogger(__name__)

EvaluatorKind = Literal["analytic", "simulate"]

# 仿真评估的移动需要超过的相对噪声带
SIMULATION_NOISE_BAND = 0.02


@dataclass
class Evaluator(ABC):
    """评估并行空间中的点，按配置缓存并统计不同点的评估次数"""

    model: ModelSpec
    server: ServerSpec
    sla_ms: float
    power_budget_w: float | None = None
    calibration: Calibration = DEFAULT_CALIBRATION
    partitioner: Partitioner | None = None
    seed: int = 0
    noise_band: float = 0.0
    _cache: dict[SchedConfig, Evaluation] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.partitioner is None:
            self.partitioner = Partitioner(calibration=self.calibration, seed=self.seed)

    @property
    def evaluations(self) -> int:
        return len(self._cache)

    def evaluate(self, cfg: SchedConfig) -> Evaluation:
        if cfg not in self._cache:
            self._cache[cfg] = self._evaluate_guarded(cfg)
        return self._cache[cfg]

    def _evaluate_guarded(self, cfg: SchedConfig) -> Evaluation:
        hot_hit_rate = 1.0
        try:
            if cfg.strategy.kind == StrategyKind.HOT_DENSE_ON_ACCEL:
                hot_hit_rate = self.partitioner.hot_hit_rate(self.model, self.server, cfg.accel.m)
            return self._evaluate(cfg, hot_hit_rate)
        except CustomException as e:
            logger.debug("配置%s不可行: %s", cfg.key(), e.message)
            return Evaluation(cfg=cfg, qps=0.0, power_w=0.0, tail_latency_s=math.inf, valid=False)

    @abstractmethod
    def _evaluate(self, cfg: SchedConfig, hot_hit_rate: float) -> Evaluation:
        raise NotImplementedError


@dataclass
class AnalyticEvaluator(Evaluator):
    """闭式流水线模型评估：空载尾延迟 < L 且空闲功耗 < P 时有效"""

    def _evaluate(self, cfg: SchedConfig, hot_hit_rate: float) -> Evaluation:
        pipeline = build_pipeline(self.model, self.server, cfg, self.calibration, hot_hit_rate, self.sla_ms)
        qps, power, valid = pipeline.latency_bounded_qps(self.sla_ms, self.power_budget_w)
        return Evaluation(cfg=cfg, qps=qps, power_w=power, tail_latency_s=pipeline.unloaded_tail_s, valid=valid)


@dataclass
class SimulationEvaluator(Evaluator):
    """离散事件仿真评估，各点使用相同种子"""

    noise_band: float = SIMULATION_NOISE_BAND
    queries: int = 2000

    def _evaluate(self, cfg: SchedConfig, hot_hit_rate: float) -> Evaluation:
        result = measure_latency_bounded_qps(
            self.server,
            self.model,
            cfg.strategy,
            cfg,
            self.sla_ms,
            self.power_budget_w,
            self.seed,
            self.calibration,
            hot_hit_rate,
            mode="simulate",
            queries=self.queries,
        )
        return Evaluation(
            cfg=cfg,
            qps=result.qps,
            power_w=result.peak_power_w,
            tail_latency_s=result.tail_latency_s,
            valid=not result.violation,
        )


def make_evaluator(
    kind: EvaluatorKind,
    model: ModelSpec,
    server: ServerSpec,
    sla_ms: float,
    power_budget_w: float | None = None,
    calibration: Calibration = DEFAULT_CALIBRATION,
    partitioner: Partitioner | None = None,
    seed: int = 0,
) -> Evaluator:
    if kind == "analytic":
        return AnalyticEvaluator(model, server, sla_ms, power_budget_w, calibration, partitioner, seed)
    if kind == "simulate":
        return SimulationEvaluator(model, server, sla_ms, power_budget_w, calibration, partitioner, seed)
    error_msg = f"未知的评估器类型: {kind}"
    raise ValueError(error_msg)
