import logging
from concurrent.futures import ThreadPoolExecutor

from src.core.catalog import ModelSpec, ServerSpec
from src.core.partitioner import Partitioner, enumerate_strategies
from src.core.perfmodel import DEFAULT_CALIBRATION, Calibration
from src.exception import CustomException, InternalErrorException

from .entities.search_entity import EfficiencyTable, EfficiencyTuple, SearchTrace
from .evaluator import EvaluatorKind, make_evaluator
from .gradient_search import gradient_search
from .search_space import SearchSpace

logger = logging.getLogger(__name__)


def profile_pair(
    model: ModelSpec,
    server: ServerSpec,
    sla_ms: float | None = None,
    evaluator_kind: EvaluatorKind = "analytic",
    seed: int = 0,
    calibration: Calibration = DEFAULT_CALIBRATION,
    power_budget_w: float | None = None,
    batches: list[int] | None = None,
) -> tuple[EfficiencyTuple, list[SearchTrace]]:
    """对一个 (模型, 服务器) 在所有可行策略上做梯度搜索，取吞吐最高的效率元组"""
    sla_ms = sla_ms if sla_ms is not None else model.sla_ms
    strategies = enumerate_strategies(model, server, calibration)
    if not strategies:
        failure = f"{model.name}在{server.name}上没有可行的调度策略"
        logger.warning(failure)
        return EfficiencyTuple(model=model.name, server=server.name, violation=True, failure=failure), []

    partitioner = Partitioner(calibration=calibration, seed=seed)
    evaluator = make_evaluator(evaluator_kind, model, server, sla_ms, power_budget_w, calibration, partitioner, seed)
    space = SearchSpace.for_server(server, batches)
    best: EfficiencyTuple | None = None
    traces = []
    for strategy in strategies:
        trace = SearchTrace()
        result = gradient_search(evaluator, strategy, space, trace)
        traces.append(trace)
        if result.usable and (
            best is None or (result.qps, -result.power_w) > (best.qps, -best.power_w)
        ):
            best = result
    if best is None:
        return EfficiencyTuple(model=model.name, server=server.name, violation=True), traces
    if best.power_w > server.tdp_sum_w + 1e-6:
        error_msg = f"{model.name}@{server.name}的功耗{best.power_w:.1f}W超过TDP之和"
        raise InternalErrorException(error_msg)
    return best, traces


def profile_all(
    models: list[ModelSpec],
    servers: list[ServerSpec],
    sla_ms: dict[str, float] | None = None,
    evaluator_kind: EvaluatorKind = "analytic",
    seed: int = 0,
    calibration: Calibration = DEFAULT_CALIBRATION,
    power_budget_w: float | None = None,
    batches: list[int] | None = None,
    jobs: int = 1,
    traces: dict[tuple[str, str], list[SearchTrace]] | None = None,
) -> EfficiencyTable:
    """评估每个 (模型, 服务器) 组合，生成效率表

    单个组合的失败记录在该条目的 failure 字段中，不影响其它组合
    """
    sla_ms = sla_ms or {}
    pairs = [(model, server) for model in models for server in servers]

    def run(pair: tuple[ModelSpec, ServerSpec]) -> tuple[EfficiencyTuple, list[SearchTrace]]:
        model, server = pair
        try:
            return profile_pair(
                model, server, sla_ms.get(model.name), evaluator_kind, seed, calibration, power_budget_w, batches,
            )
        except (CustomException, ValueError) as e:
            logger.warning("%s@%s 画像失败: %s", model.name, server.name, e)
            return EfficiencyTuple(model=model.name, server=server.name, violation=True, failure=str(e)), []

    with ThreadPoolExecutor(max_workers=max(jobs, 1)) as executor:
        results = list(executor.map(run, pairs))

    table = EfficiencyTable()
    for (model, server), (entry, pair_traces) in zip(pairs, results, strict=True):
        table.put(entry)
        if traces is not None:
            traces[(model.name, server.name)] = pair_traces
    logger.info("效率表完成: %d 条记录，%d 条失败", len(table.entries), len(table.failures))
    return table
