import logging
from collections.abc import Callable

from src.core.perfmodel import SchedConfig, SchedulingStrategy

from .entities.search_entity import EfficiencyTuple, Evaluation, SearchTrace
from .evaluator import Evaluator
from .search_space import SearchSpace

logger = logging.getLogger(__name__)

Point = tuple[int, int]


def _moves(point: Point, step: int, contains: Callable[[int, int], bool]) -> list[Point]:
    """三个候选方向：d+step、m+step、二者同时"""
    if step <= 0:
        error_msg = "步长必须为正整数"
        raise ValueError(error_msg)
    m, di = point
    candidates = [(m, di + step), (m + step, di), (m + step, di + step)]
    return [c for c in candidates if contains(*c)]


def candidate_moves(cfg: SchedConfig, step: int, space: SearchSpace) -> list[SchedConfig]:
    """主机侧搜索线程组的候选配置，过滤掉超出硬件边界的点"""
    group = cfg.search_group
    if group.d not in space.batches:
        error_msg = f"批大小{group.d}不在搜索网格中"
        raise ValueError(error_msg)
    di = space.batches.index(group.d)
    accel = None
    if cfg.accel is not None:
        accel = (cfg.accel.m, space.accel_batches.index(cfg.accel.d))
    points = _moves((group.m, di), step, lambda m, d: space.contains(cfg.strategy, group.o, m, d))
    return [space.build_config(cfg.strategy, group.o, m, d, accel) for m, d in points]


def _better(a: Evaluation, b: Evaluation | None) -> bool:
    return b is None or a.sort_key() < b.sort_key()


def _climb(
    start: Point,
    evaluate: Callable[[Point], Evaluation],
    contains: Callable[[int, int], bool],
    noise_band: float,
    on_move: Callable[[Evaluation], None] | None = None,
) -> Evaluation:
    """在 P_sp(M+D) 中从起点爬山

    移动到 QPS 增益最大的有效候选；当前点无效且没有有效候选时沿尾延迟下降方向移动；
    所有候选增益都不超过噪声带时停止
    """
    point = start
    current = evaluate(point)
    if on_move is not None:
        on_move(current)
    while True:
        candidates = [(p, evaluate(p)) for p in _moves(point, 1, contains)]
        threshold = current.qps * (1.0 + noise_band)
        improving = [(p, e) for p, e in candidates if e.valid and e.qps > threshold]
        chosen = None
        for p, e in improving:
            if chosen is None or _better(e, chosen[1]):
                chosen = (p, e)
        if chosen is None and not current.valid:
            descending = [(p, e) for p, e in candidates if e.tail_latency_s < current.tail_latency_s]
            for p, e in descending:
                if chosen is None or (e.tail_latency_s, e.sort_key()) < (chosen[1].tail_latency_s, chosen[1].sort_key()):
                    chosen = (p, e)
        if chosen is None:
            return current
        point, current = chosen
        if on_move is not None:
            on_move(current)


def _accel_best(
    evaluator: Evaluator,
    space: SearchSpace,
    strategy: SchedulingStrategy,
    o: int,
    m: int,
    di: int,
    cache: dict[tuple[int, int, int], Evaluation],
) -> Evaluation:
    """主机侧每一步之后的加速器侧 P_sp(M+D) 嵌套搜索"""
    key = (o, m, di)
    if key not in cache:
        cache[key] = _climb(
            (1, 0),
            lambda p: evaluator.evaluate(space.build_config(strategy, o, m, di, p)),
            space.contains_accel,
            evaluator.noise_band,
        )
    return cache[key]


def _point_evaluator(
    evaluator: Evaluator,
    space: SearchSpace,
    strategy: SchedulingStrategy,
    o: int,
) -> Callable[[Point], Evaluation]:
    accel_cache: dict[tuple[int, int, int], Evaluation] = {}

    def evaluate(point: Point) -> Evaluation:
        m, di = point
        if strategy.uses_accel:
            return _accel_best(evaluator, space, strategy, o, m, di, accel_cache)
        return evaluator.evaluate(space.build_config(strategy, o, m, di))

    return evaluate


def _to_tuple(evaluator: Evaluator, strategy: SchedulingStrategy, best: Evaluation | None) -> EfficiencyTuple:
    if best is None or not best.valid or best.qps <= 0:
        return EfficiencyTuple(model=evaluator.model.name, server=evaluator.server.name, violation=True)
    return EfficiencyTuple(
        model=evaluator.model.name,
        server=evaluator.server.name,
        qps=best.qps,
        power_w=best.power_w,
        strategy=strategy,
        cfg=best.cfg,
    )


def gradient_search(
    evaluator: Evaluator,
    strategy: SchedulingStrategy,
    space: SearchSpace | None = None,
    trace: SearchTrace | None = None,
) -> EfficiencyTuple:
    """梯度搜索

    外层按 o 升序，每个 o 从 (m=1, d=最小) 在 P_sp(M+D) 中爬山；
    当某个 o 的峰值不再高于上一个 o 时终止，返回各 o 峰值中的最优点
    """
    space = space or SearchSpace.for_server(evaluator.server)
    trace = trace if trace is not None else SearchTrace()
    trace.strategy = strategy.name
    best: Evaluation | None = None
    previous_peak: float | None = None

    for o in space.o_values(strategy):
        peak = _climb(
            (1, 0),
            _point_evaluator(evaluator, space, strategy, o),
            lambda m, di, o=o: space.contains(strategy, o, m, di),
            evaluator.noise_band,
            trace.record,
        )
        peak_qps = peak.qps if peak.valid else 0.0
        trace.per_o_peaks.append(peak_qps)
        logger.debug("%s o=%d 峰值 %.2f qps (%s)", strategy.name, o, peak_qps, peak.cfg.key())
        if peak.valid and _better(peak, best):
            best = peak
        if previous_peak is not None and previous_peak > 0 and peak_qps <= previous_peak * (1.0 + evaluator.noise_band):
            break
        previous_peak = peak_qps

    trace.evaluations = evaluator.evaluations
    result = _to_tuple(evaluator, strategy, best)
    logger.info(
        "梯度搜索%s@%s %s: %.2f qps, %d次评估",
        evaluator.model.name, evaluator.server.name, strategy.name, result.qps, evaluator.evaluations,
    )
    return result


def surface(
    evaluator: Evaluator,
    strategy: SchedulingStrategy,
    space: SearchSpace | None = None,
) -> dict[tuple[int, int, int], Evaluation]:
    """穷举主机侧网格，加速器策略取每个主机点上加速器侧的最优"""
    space = space or SearchSpace.for_server(evaluator.server)
    values: dict[tuple[int, int, int], Evaluation] = {}
    for o, m, di in space.host_points(strategy):
        if strategy.uses_accel:
            best = None
            for am, adi in space.accel_points():
                e = evaluator.evaluate(space.build_config(strategy, o, m, di, (am, adi)))
                if e.valid and _better(e, best):
                    best = e
            values[(o, m, di)] = best or evaluator.evaluate(space.build_config(strategy, o, m, di, (1, 0)))
        else:
            values[(o, m, di)] = evaluator.evaluate(space.build_config(strategy, o, m, di))
    return values


def brute_force_search(
    evaluator: Evaluator,
    strategy: SchedulingStrategy,
    space: SearchSpace | None = None,
) -> EfficiencyTuple:
    """穷举网格，返回满足约束的最大吞吐点，平局依次取功耗低、m小、d小"""
    best = None
    for e in surface(evaluator, strategy, space).values():
        if e.valid and e.qps > 0 and _better(e, best):
            best = e
    return _to_tuple(evaluator, strategy, best)
