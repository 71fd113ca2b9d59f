import math
from typing import Literal

from pydantic import BaseModel, Field

from src.core.catalog import ModelSpec, ServerSpec
from src.core.catalog import footprint as fp

from . import cost_model as cm
from .entities.calibration_entity import DEFAULT_CALIBRATION, Calibration
from .entities.sched_entity import HostConfig, SchedConfig, StrategyKind

HOST = "host"
ACCEL = "accel"


class Stage(BaseModel):
    """流水线阶段

    主机阶段的批服务时间为 overhead_s + per_item_s * b；
    加速器阶段数据加载与计算重叠，吞吐由二者较大值决定
    """

    name: str
    device: Literal["host", "accel"]
    workers: int = Field(ge=1)
    batch: int = Field(ge=1)
    cores: int = 0
    overhead_s: float = 0.0
    per_item_s: float = 0.0
    data_load_s: float = 0.0  # 满融合批的数据加载时间
    compute_s: float = 0.0  # 满融合批的计算时间
    memory_s_per_item: float = 0.0  # 单样本占用的有效内存带宽时间
    sparse_per_item_s: float = 0.0  # per_item_s 中嵌入表访问部分
    comm_per_item_s: float = 0.0  # per_item_s 中中间队列拷贝部分
    lookup_fraction: float = 1.0  # 在主机上执行的查找比例

    def service_s(self, items: float) -> float:
        """处理 items 个样本的一个批次所需时间"""
        if self.device == ACCEL:
            return self.data_load_s + self.compute_s
        return self.overhead_s + self.per_item_s * items

    @property
    def interval_s(self) -> float:
        """加速器线程相邻两个批次完成的间隔"""
        return max(self.data_load_s, self.compute_s)

    def capacity_qps(self, calibration: Calibration) -> float:
        """阶段可持续的查询吞吐"""
        dist = calibration.query_size
        if self.device == ACCEL:
            if self.interval_s <= 0:
                return math.inf
            items_per_s = self.workers * self.batch / self.interval_s
            return items_per_s / dist.mean
        per_query = dist.expected_subqueries(self.batch) * self.overhead_s + dist.mean * self.per_item_s
        if per_query <= 0:
            return math.inf
        return self.workers / per_query


class PipelinePath(BaseModel):
    """一条串行阶段链，查询按容量比例分配到各条路径"""

    name: str
    stages: list[Stage]
    fusion_timeout_s: float = math.inf

    def capacity_qps(self, calibration: Calibration) -> float:
        return min(stage.capacity_qps(calibration) for stage in self.stages)

    def unloaded_tail_s(self, calibration: Calibration) -> float:
        """空载时尾部分位查询的完成时间（流水线填充加排空）"""
        dist = calibration.query_size
        n_tail = dist.quantile(calibration.tail_percentile / 100.0)
        host = [s for s in self.stages if s.device == HOST]
        accel = [s for s in self.stages if s.device == ACCEL]
        total = 0.0
        if host:
            d = host[0].batch
            items = min(d, n_tail)
            subqueries = n_tail / d
            services = [s.service_s(items) for s in host]
            total += sum(services)
            bottleneck = max(range(len(host)), key=lambda i: services[i] / host[i].workers)
            total += max(0.0, subqueries / host[bottleneck].workers - 1.0) * services[bottleneck]
        for stage in accel:
            if n_tail < stage.batch:
                fill_rate = self.capacity_qps(calibration) * dist.mean
                total += min(self.fusion_timeout_s, (stage.batch - n_tail) / fill_rate)
            total += stage.service_s(stage.batch)
            batches = n_tail / stage.batch
            total += max(0.0, batches / stage.workers - 1.0) * stage.interval_s
        return total


class PipelineModel(BaseModel):
    """一个 (模型, 服务器, 配置) 的闭式流水线模型"""

    server: ServerSpec
    cfg: SchedConfig
    calibration: Calibration = DEFAULT_CALIBRATION
    paths: list[PipelinePath]
    sparse_bytes_per_item: float = 0.0

    @property
    def capacity_qps(self) -> float:
        """饱和吞吐 mu，多条路径时为各路径容量之和"""
        return sum(path.capacity_qps(self.calibration) for path in self.paths)

    @property
    def unloaded_tail_s(self) -> float:
        """空载尾延迟 T0"""
        return max(path.unloaded_tail_s(self.calibration) for path in self.paths)

    def utilization(self, rho: float) -> cm.Utilization:
        """负载率 rho 下各组件利用率"""
        cores = self.server.cpu.cores
        cpu = memory = accel = 0.0
        for path in self.paths:
            path_capacity = path.capacity_qps(self.calibration)
            for stage in path.stages:
                busy = rho * path_capacity / stage.capacity_qps(self.calibration)
                if stage.device == HOST:
                    cpu += stage.cores * busy / cores
                    memory += rho * path_capacity * self.calibration.query_size.mean * stage.memory_s_per_item
                else:
                    accel = max(accel, busy)
        return cm.Utilization(cpu=cpu, memory=memory, accel=accel).clipped()

    def power_w(self, rho: float) -> float:
        return cm.power_draw(self.server, self.cfg, self.utilization(rho), self.calibration)

    def rho(self, offered_qps: float) -> float:
        capacity = self.capacity_qps
        return offered_qps / capacity if capacity > 0 else math.inf

    def tail_latency_s(self, offered_qps: float) -> float:
        """负载下的尾延迟 T0 / (1 - rho)，rho >= 1 时为无穷大"""
        rho = self.rho(offered_qps)
        if rho >= 1.0:
            return math.inf
        return self.unloaded_tail_s / (1.0 - rho)

    def power_bound_rho(self, power_budget_w: float | None) -> float:
        """功耗预算允许的最大负载率"""
        if power_budget_w is None:
            return 1.0
        idle = self.power_w(0.0)
        full = self.power_w(1.0)
        if power_budget_w <= idle:
            return 0.0
        if full <= power_budget_w or full <= idle:
            return 1.0
        return (power_budget_w - idle) / (full - idle)

    def latency_bounded_qps(self, sla_ms: float, power_budget_w: float | None = None) -> tuple[float, float, bool]:
        """满足SLA与功耗预算的最大吞吐

        Returns:
            tuple: (qps, 该吞吐下的功耗, 是否有效)；无效点 qps 为0

        """
        sla_s = sla_ms / 1000.0
        t0 = self.unloaded_tail_s
        idle = self.power_w(0.0)
        valid = t0 < sla_s and (power_budget_w is None or idle < power_budget_w)
        if not valid:
            return 0.0, idle, False
        rho = min(1.0 - t0 / sla_s, self.power_bound_rho(power_budget_w))
        return self.capacity_qps * rho, self.power_w(rho), True


def _host_stage(
    name: str,
    model: ModelSpec,
    server: ServerSpec,
    group: HostConfig,
    occupied: int,
    calibration: Calibration,
    *,
    dense: bool,
    sparse: bool,
    active_threads: int = 1,
    lookup_fraction: float = 1.0,
    comm_per_item_s: float = 0.0,
) -> Stage:
    """构建主机阶段"""
    per_item = comm_per_item_s
    ops = 0
    overhead_divisor = 1
    memory_s = 0.0
    if dense:
        per_item += cm.dense_seconds_per_item(model, server, group, occupied, calibration)
        ops += fp.dense_op_count(model)
    if sparse:
        memory_s = lookup_fraction * cm.sparse_seconds_per_item(model, server, calibration)
        per_item += memory_s * active_threads
        ops += model.num_emb_tables
        if not dense:
            # 稀疏线程的算子工作线程并行处理各张表
            overhead_divisor = group.o
    return Stage(
        name=name,
        device=HOST,
        workers=group.m,
        batch=group.d,
        cores=group.cores,
        overhead_s=ops * calibration.host_dispatch_s / overhead_divisor,
        per_item_s=per_item,
        memory_s_per_item=memory_s,
        sparse_per_item_s=memory_s * active_threads if sparse else 0.0,
        comm_per_item_s=comm_per_item_s,
        lookup_fraction=lookup_fraction,
    )


def _accel_stage(
    model: ModelSpec,
    server: ServerSpec,
    cfg: SchedConfig,
    calibration: Calibration,
    hot_hit_rate: float,
) -> Stage:
    latency = cm.accel_stage_latencies(model, server, cfg, cfg.accel.d, calibration, hot_hit_rate)
    return Stage(
        name="accel",
        device=ACCEL,
        workers=cfg.accel.m,
        batch=cfg.accel.d,
        data_load_s=latency.data_load_s,
        compute_s=latency.compute_s,
    )


def _comm_per_item_s(model: ModelSpec, calibration: Calibration) -> float:
    """池化结果经中间队列拷贝到稠密线程的时间"""
    return fp.pooled_bytes_per_item(model, calibration.bytes_per_element) / (calibration.memcpy_gbps * 1e9)


def _leftover_path(
    model: ModelSpec,
    server: ServerSpec,
    cfg: SchedConfig,
    calibration: Calibration,
    extra_active: int,
) -> PipelinePath | None:
    """剩余主机核心上的路径"""
    left = cfg.leftover
    if left is None:
        return None
    occupied = cfg.host_cores
    if cfg.strategy.leftover == StrategyKind.MODEL_BASED:
        stage = _host_stage(
            "leftover", model, server, left, occupied, calibration,
            dense=True, sparse=True, active_threads=left.m + extra_active,
        )
        return PipelinePath(name="leftover", stages=[stage])
    sparse_m = left.m // 2
    sparse_cfg = HostConfig(m=sparse_m, o=1, d=left.d)
    dense_cfg = HostConfig(m=left.m - sparse_m, o=1, d=left.d)
    return PipelinePath(
        name="leftover",
        stages=[
            _host_stage(
                "leftover_sparse", model, server, sparse_cfg, occupied, calibration,
                dense=False, sparse=True, active_threads=sparse_m + extra_active,
            ),
            _host_stage(
                "leftover_dense", model, server, dense_cfg, occupied, calibration,
                dense=True, sparse=False, comm_per_item_s=_comm_per_item_s(model, calibration),
            ),
        ],
    )


def leftover_sparse_threads(cfg: SchedConfig) -> int:
    """剩余核心中访问嵌入表的线程数"""
    if cfg.leftover is None:
        return 0
    if cfg.strategy.leftover == StrategyKind.MODEL_BASED:
        return cfg.leftover.m
    return cfg.leftover.m // 2


def build_pipeline(
    model: ModelSpec,
    server: ServerSpec,
    cfg: SchedConfig,
    calibration: Calibration = DEFAULT_CALIBRATION,
    hot_hit_rate: float = 1.0,
    sla_ms: float | None = None,
) -> PipelineModel:
    """根据策略构建闭式流水线模型"""
    cm.validate_config(server, cfg)
    kind = cfg.strategy.kind
    occupied = cfg.host_cores
    sla_ms = sla_ms if sla_ms is not None else model.sla_ms
    timeout = calibration.fusion_timeout_s(sla_ms)
    paths: list[PipelinePath] = []

    if kind == StrategyKind.MODEL_BASED:
        stage = _host_stage(
            "model", model, server, cfg.host, occupied, calibration,
            dense=True, sparse=True, active_threads=cfg.host.m,
        )
        paths.append(PipelinePath(name="host", stages=[stage]))
    elif kind == StrategyKind.SD_PIPELINE_HOST_ONLY:
        paths.append(
            PipelinePath(
                name="host",
                stages=[
                    _host_stage(
                        "sparse", model, server, cfg.sparse_host, occupied, calibration,
                        dense=False, sparse=True, active_threads=cfg.sparse_host.m,
                    ),
                    _host_stage(
                        "dense", model, server, cfg.host, occupied, calibration,
                        dense=True, sparse=False, comm_per_item_s=_comm_per_item_s(model, calibration),
                    ),
                ],
            ),
        )
    elif kind == StrategyKind.SD_PIPELINE_HOST_ACCEL:
        paths.append(
            PipelinePath(
                name="accel",
                fusion_timeout_s=timeout,
                stages=[
                    _host_stage(
                        "sparse", model, server, cfg.sparse_host, occupied, calibration,
                        dense=False, sparse=True, active_threads=cfg.sparse_host.m,
                    ),
                    _accel_stage(model, server, cfg, calibration, 1.0),
                ],
            ),
        )
    else:
        extra = leftover_sparse_threads(cfg)
        paths.append(
            PipelinePath(
                name="accel",
                fusion_timeout_s=timeout,
                stages=[
                    _host_stage(
                        "cold_sparse", model, server, cfg.sparse_host, occupied, calibration,
                        dense=False, sparse=True, active_threads=cfg.sparse_host.m + extra,
                        lookup_fraction=1.0 - hot_hit_rate,
                    ),
                    _accel_stage(model, server, cfg, calibration, hot_hit_rate),
                ],
            ),
        )
        leftover = _leftover_path(model, server, cfg, calibration, cfg.sparse_host.m)
        if leftover is not None:
            paths.append(leftover)

    return PipelineModel(
        server=server,
        cfg=cfg,
        calibration=calibration,
        paths=paths,
        sparse_bytes_per_item=fp.sparse_bytes_per_item(model, calibration.bytes_per_element),
    )
