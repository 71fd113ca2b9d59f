import logging
import math
from typing import Literal

from src.core.catalog import ModelSpec, ServerSpec
from src.core.loadgen import gen_query_stream
from src.core.perfmodel import (
    DEFAULT_CALIBRATION,
    Calibration,
    SchedConfig,
    SchedulingStrategy,
    build_pipeline,
)
from src.exception import ValidateErrorException

from .entities.sim_entity import AnalyticResult, CrossValidation, LatencyBoundResult, SimReport
from .server_simulator import ServerSimulator

logger = logging.getLogger(__name__)

EvalMode = Literal["simulate", "analytic"]

# 二分次数上限与终止宽度
BISECTION_STEPS = 12
BRACKET_TOLERANCE = 0.01
# 实际吞吐低于提供负载的该比例视为饱和
SATURATION_RATIO = 0.95
# 起始负载占闭式容量的比例，以及向下收缩的次数
INITIAL_LOAD_FRACTION = 0.05
MAX_SHRINK = 8


def _check_strategy(strategy: SchedulingStrategy, cfg: SchedConfig) -> None:
    if cfg.strategy != strategy:
        error_msg = f"配置策略{cfg.strategy.name}与指定策略{strategy.name}不一致"
        raise ValidateErrorException(error_msg)


def analytic_eval(
    server: ServerSpec,
    model: ModelSpec,
    strategy: SchedulingStrategy,
    cfg: SchedConfig,
    offered_qps: float,
    calibration: Calibration = DEFAULT_CALIBRATION,
    hot_hit_rate: float = 1.0,
    sla_ms: float | None = None,
) -> AnalyticResult:
    """闭式确定性评估：尾延迟 = T0 + T0 * rho / (1 - rho)"""
    _check_strategy(strategy, cfg)
    if offered_qps < 0:
        error_msg = "提供负载不能为负数"
        raise ValidateErrorException(error_msg)
    pipeline = build_pipeline(model, server, cfg, calibration, hot_hit_rate, sla_ms)
    rho = pipeline.rho(offered_qps)
    saturated = rho >= 1.0
    return AnalyticResult(
        offered_qps=offered_qps,
        tail_latency_s=pipeline.tail_latency_s(offered_qps),
        qps=min(offered_qps, pipeline.capacity_qps),
        power_w=pipeline.power_w(min(rho, 1.0)),
        rho=rho,
        saturated=saturated,
    )


def _simulate_at(
    simulator: ServerSimulator,
    model: ModelSpec,
    rate: float,
    seed: int,
    queries: int,
    calibration: Calibration,
) -> SimReport:
    duration = queries / rate
    stream = gen_query_stream(
        rate,
        duration,
        model,
        seed,
        calibration.query_size,
        calibration.pooling_tail,
    )
    return simulator.run(stream, duration)


def measure_latency_bounded_qps(
    server: ServerSpec,
    model: ModelSpec,
    strategy: SchedulingStrategy,
    cfg: SchedConfig,
    sla_ms: float,
    power_budget_w: float | None = None,
    seed: int = 0,
    calibration: Calibration = DEFAULT_CALIBRATION,
    hot_hit_rate: float = 1.0,
    mode: EvalMode = "simulate",
    queries: int = 2000,
) -> LatencyBoundResult:
    """二分搜索满足尾延迟与功耗约束的最大到达率

    先以闭式容量的一小部分为起点做几何扩展或收缩找到区间，再二分；
    每次评估使用相同种子（成对种子）；实际吞吐低于提供负载的95%视为饱和
    """
    _check_strategy(strategy, cfg)
    if sla_ms <= 0:
        error_msg = "SLA必须为正数"
        raise ValidateErrorException(error_msg)
    sla_s = sla_ms / 1000.0
    simulator = ServerSimulator(model, server, cfg, calibration, hot_hit_rate, sla_ms if math.isfinite(sla_ms) else None)
    capacity = simulator.pipeline.capacity_qps
    if not math.isfinite(capacity) or capacity <= 0:
        capacity = 1.0
    evaluations = 0

    def trial(rate: float) -> tuple[bool, float, float]:
        """返回 (是否满足约束, 峰值功耗, 尾延迟)"""
        nonlocal evaluations
        evaluations += 1
        if mode == "analytic":
            result = analytic_eval(server, model, strategy, cfg, rate, calibration, hot_hit_rate, sla_ms)
            ok = not result.saturated and result.tail_latency_s <= sla_s
            peak, tail = result.power_w, result.tail_latency_s
        else:
            report = _simulate_at(simulator, model, rate, seed, queries, calibration)
            ok = report.tail_latency_s <= sla_s and report.achieved_qps >= SATURATION_RATIO * rate
            peak, tail = report.peak_power_w, report.tail_latency_s
        if power_budget_w is not None and peak > power_budget_w:
            ok = False
        return ok, peak, tail

    # 1.找到可行下界
    rate = capacity * INITIAL_LOAD_FRACTION
    ok, peak, tail = trial(rate)
    shrink = 0
    while not ok and shrink < MAX_SHRINK:
        rate /= 4
        shrink += 1
        ok, peak, tail = trial(rate)
    if not ok:
        logger.info("%s@%s %s: 最小负载也无法满足SLA", model.name, server.name, cfg.strategy.name)
        return LatencyBoundResult(qps=0.0, peak_power_w=peak, tail_latency_s=tail, violation=True, evaluations=evaluations)
    lo, lo_peak, lo_tail = rate, peak, tail

    # 2.几何扩展找到不可行上界
    hi = None
    while hi is None:
        candidate = lo * 2
        if candidate > capacity * 4:
            hi = candidate
            break
        ok, peak, tail = trial(candidate)
        if ok:
            lo, lo_peak, lo_tail = candidate, peak, tail
        else:
            hi = candidate

    # 3.二分
    for _ in range(BISECTION_STEPS):
        if hi - lo < BRACKET_TOLERANCE * lo:
            break
        mid = (lo + hi) / 2
        ok, peak, tail = trial(mid)
        if ok:
            lo, lo_peak, lo_tail = mid, peak, tail
        else:
            hi = mid

    logger.debug(
        "%s@%s %s: 延迟约束吞吐%.2f qps，峰值功耗%.1f W，评估%d次",
        model.name, server.name, cfg.strategy.name, lo, lo_peak, evaluations,
    )
    return LatencyBoundResult(qps=lo, peak_power_w=lo_peak, tail_latency_s=lo_tail, evaluations=evaluations)


def cross_validate(
    server: ServerSpec,
    model: ModelSpec,
    cfg: SchedConfig,
    calibration: Calibration = DEFAULT_CALIBRATION,
    hot_hit_rate: float = 1.0,
    seed: int = 0,
    overload: float = 1.3,
    queries: int = 4000,
) -> CrossValidation:
    """在过载下仿真，比较闭式饱和吞吐与仿真饱和吞吐"""
    simulator = ServerSimulator(model, server, cfg, calibration, hot_hit_rate)
    capacity = simulator.pipeline.capacity_qps
    report = _simulate_at(simulator, model, capacity * overload, seed, queries, calibration)
    return CrossValidation(analytic_qps=capacity, simulated_qps=report.achieved_qps)
