import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.core.catalog import ModelSpec, ServerSpec, SizeClass
from src.core.catalog import footprint as fp
from src.core.perfmodel import DEFAULT_CALIBRATION, Calibration, SchedulingStrategy, StrategyKind
from src.exception import InfeasibleException

from .entities.partition_entity import (
    AccessProfile,
    DenseSubgraph,
    PartitionPlan,
    TableDescriptor,
    TableProfile,
)

logger = logging.getLogger(__name__)

# 阈值二分的迭代次数
BISECTION_STEPS = 200


def build_access_profile(
    model: ModelSpec,
    zipf_s: float = DEFAULT_CALIBRATION.zipf_s,
    seed: int = 0,
    size_class: SizeClass = SizeClass.PROD,
) -> AccessProfile:
    """为每张表生成Zipf流行度排序，名次到行号的映射为带种子的仿射置换"""
    if zipf_s <= 0:
        error_msg = "zipf_s必须大于0"
        raise ValueError(error_msg)
    rng = np.random.default_rng(seed)
    rows = int(round(model.rows(size_class)))
    tables = []
    for weight in model.table_lookups():
        multiplier = 1
        if rows > 1:
            multiplier = int(rng.integers(1, rows))
            while math.gcd(multiplier, rows) != 1:
                multiplier = int(rng.integers(1, rows))
        offset = int(rng.integers(0, rows))
        tables.append(TableProfile(rows=rows, weight=weight, multiplier=multiplier, offset=offset))
    return AccessProfile(zipf_s=zipf_s, tables=tables)


def _counts_at(profile: AccessProfile, log_tau: float, harmonics: list[float]) -> list[int]:
    """访问频率不低于 tau 的各表行数"""
    s = profile.zipf_s
    counts = []
    for index, table in enumerate(profile.tables):
        log_count = (math.log(table.weight) - math.log(harmonics[index]) - log_tau) / s
        if log_count >= math.log(table.rows) + 1:
            count = table.rows
        elif log_count < 0:
            count = 0
        else:
            count = min(table.rows, math.floor(math.exp(log_count)))
        # 修正浮点取整误差，保证恰好是 freq >= tau 的前缀
        tau = math.exp(log_tau)
        while count > 0 and profile.frequency(index, count - 1) < tau:
            count -= 1
        while count < table.rows and profile.frequency(index, count) >= tau:
            count += 1
        counts.append(count)
    return counts


def select_hot_rows(profile: AccessProfile, capacity_rows: int) -> list[int]:
    """全局按行访问频率贪心选择热行，返回每张表的热行数

    结果等价于按 (频率降序, 表序号升序, 名次升序) 排序后取前 capacity_rows 行
    """
    total_rows = sum(t.rows for t in profile.tables)
    if capacity_rows >= total_rows:
        return [t.rows for t in profile.tables]
    if capacity_rows <= 0 or not profile.tables:
        return [0] * len(profile.tables)

    harmonics = [profile.table_harmonic(i) for i in range(len(profile.tables))]
    top = max(profile.frequency(i, 0) for i in range(len(profile.tables)))
    bottom = min(profile.frequency(i, t.rows - 1) for i, t in enumerate(profile.tables))
    # hi 处选中行数不超过容量，lo 处超过容量
    hi = math.log(top) + 1e-9
    lo = math.log(bottom) - 1.0
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        if sum(_counts_at(profile, mid, harmonics)) <= capacity_rows:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    counts = _counts_at(profile, hi, harmonics)

    # 用堆逐行补齐剩余容量
    remaining = capacity_rows - sum(counts)
    heap = [
        (-profile.frequency(i, counts[i]), i)
        for i, t in enumerate(profile.tables)
        if counts[i] < t.rows
    ]
    heapq.heapify(heap)
    while remaining > 0 and heap:
        _, index = heapq.heappop(heap)
        counts[index] += 1
        remaining -= 1
        if counts[index] < profile.tables[index].rows:
            heapq.heappush(heap, (-profile.frequency(index, counts[index]), index))
    return counts


def _dense_subgraph(model: ModelSpec, calibration: Calibration) -> DenseSubgraph:
    return DenseSubgraph(
        bottom_fc=model.bottom_fc,
        predict_fc=model.predict_fc,
        predict_fc_replicas=model.predict_fc_replicas,
        attention_kind=model.attention_kind.value,
        attention_fc=model.attention_fc,
        weight_bytes=fp.dense_weight_bytes(model, calibration.bytes_per_element),
    )


def partition_model(
    model: ModelSpec,
    server: ServerSpec,
    co_location: int,
    profile: AccessProfile,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> PartitionPlan:
    """划分为稠密子图、完整稀疏子图与热稀疏子图

    每个共置线程的热表预算为 加速器容量 / m 减去稠密权重
    """
    if co_location < 1:
        error_msg = "共置线程数必须大于等于1"
        raise ValueError(error_msg)
    element = calibration.bytes_per_element
    row_bytes = model.emb_dim * element
    dense = _dense_subgraph(model, calibration)
    sparse_full = [
        TableDescriptor(rows=t.rows, dim=model.emb_dim, bytes=t.rows * row_bytes) for t in profile.tables
    ]

    if server.accel is None:
        return PartitionPlan(
            model=model.name,
            server=server.name,
            co_location=co_location,
            dense=dense,
            sparse_full=sparse_full,
            sparse_hot=[0] * len(sparse_full),
            hot_hit_rate=0.0,
            hot_bytes=0.0,
            budget_bytes=0.0,
            placement={"dense": "host", "sparse_full": "host", "sparse_hot": "none"},
        )

    budget = server.accel.hbm_bytes / co_location - dense.weight_bytes
    if budget < 0:
        error_msg = f"{model.name}的稠密子图超出{server.name}加速器每线程预算"
        raise InfeasibleException(
            error_msg,
            {"model": model.name, "server": server.name, "co_location": co_location, "budget_bytes": budget},
        )
    hot = select_hot_rows(profile, int(budget // row_bytes))
    plan = PartitionPlan(
        model=model.name,
        server=server.name,
        co_location=co_location,
        dense=dense,
        sparse_full=sparse_full,
        sparse_hot=hot,
        hot_hit_rate=profile.hit_rate(hot),
        hot_bytes=sum(hot) * row_bytes,
        budget_bytes=budget,
        placement={"dense": "accel", "sparse_full": "host", "sparse_hot": "accel"},
    )
    logger.debug(
        "划分%s@%s m=%d: 预算%.3eB, 热行%d, 命中率%.4f",
        model.name, server.name, co_location, budget, sum(hot), plan.hot_hit_rate,
    )
    return plan


def accel_feasible(model: ModelSpec, server: ServerSpec, calibration: Calibration = DEFAULT_CALIBRATION) -> bool:
    """稠密子图能否放入单线程加速器预算"""
    if server.accel is None:
        return False
    return fp.dense_weight_bytes(model, calibration.bytes_per_element) <= server.accel.hbm_bytes


def enumerate_strategies(
    model: ModelSpec,
    server: ServerSpec,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> list[SchedulingStrategy]:
    """列出 (模型, 服务器) 的可行调度策略"""
    cores = server.cpu.cores
    if server.accel is None:
        strategies = [SchedulingStrategy(kind=StrategyKind.MODEL_BASED)]
        if cores >= 2:  # noqa: PLR2004
            strategies.append(SchedulingStrategy(kind=StrategyKind.SD_PIPELINE_HOST_ONLY))
        return strategies
    if not accel_feasible(model, server, calibration):
        return []
    strategies = [
        SchedulingStrategy(kind=StrategyKind.SD_PIPELINE_HOST_ACCEL),
        SchedulingStrategy(kind=StrategyKind.HOT_DENSE_ON_ACCEL, leftover=StrategyKind.MODEL_BASED),
    ]
    if cores >= 3:  # noqa: PLR2004
        strategies.append(
            SchedulingStrategy(kind=StrategyKind.HOT_DENSE_ON_ACCEL, leftover=StrategyKind.SD_PIPELINE_HOST_ONLY),
        )
    return strategies


@dataclass
class Partitioner:
    """按 (模型, 服务器, 共置数) 缓存划分方案"""

    calibration: Calibration = DEFAULT_CALIBRATION
    seed: int = 0
    _profiles: dict[str, AccessProfile] = field(default_factory=dict)
    _plans: dict[tuple[str, str, int], PartitionPlan] = field(default_factory=dict)

    def profile(self, model: ModelSpec) -> AccessProfile:
        if model.name not in self._profiles:
            self._profiles[model.name] = build_access_profile(
                model, self.calibration.zipf_s, self.seed, self.calibration.size_class,
            )
        return self._profiles[model.name]

    def plan(self, model: ModelSpec, server: ServerSpec, co_location: int) -> PartitionPlan:
        key = (model.name, server.name, co_location)
        if key not in self._plans:
            self._plans[key] = partition_model(model, server, co_location, self.profile(model), self.calibration)
        return self._plans[key]

    def hot_hit_rate(self, model: ModelSpec, server: ServerSpec, co_location: int) -> float:
        return self.plan(model, server, co_location).hot_hit_rate
