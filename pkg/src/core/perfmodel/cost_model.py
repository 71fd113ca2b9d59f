from pydantic import BaseModel

from src.core.catalog import GB, ModelSpec, ServerSpec
from src.core.catalog import footprint as fp
from src.exception import ValidateErrorException

from .entities.calibration_entity import DEFAULT_CALIBRATION, Calibration
from .entities.sched_entity import HostConfig, SchedConfig, StageLatency, StrategyKind


class Utilization(BaseModel):
    """各组件利用率，取值 [0, 1]"""

    cpu: float = 0.0
    memory: float = 0.0
    accel: float = 0.0

    def clipped(self) -> "Utilization":
        return Utilization(
            cpu=min(max(self.cpu, 0.0), 1.0),
            memory=min(max(self.memory, 0.0), 1.0),
            accel=min(max(self.accel, 0.0), 1.0),
        )


def validate_config(server: ServerSpec, cfg: SchedConfig) -> None:
    """校验配置在该服务器上是否可行（不使用超线程、加速器存在性）"""
    if cfg.host_cores > server.cpu.cores:
        error_msg = f"配置占用{cfg.host_cores}个核心，超过{server.name}的{server.cpu.cores}个物理核心"
        raise ValidateErrorException(error_msg, {"cfg": cfg.key()})
    if cfg.strategy.uses_accel and not server.has_accel:
        error_msg = f"{server.name}没有加速器，无法使用{cfg.strategy.name}"
        raise ValidateErrorException(error_msg, {"cfg": cfg.key()})
    if (
        cfg.strategy.leftover == StrategyKind.SD_PIPELINE_HOST_ONLY
        and cfg.leftover is not None
        and cfg.leftover.m < 2  # noqa: PLR2004
    ):
        error_msg = "剩余核心运行S-D流水至少需要2个核心"
        raise ValidateErrorException(error_msg, {"cfg": cfg.key()})


def dense_group(cfg: SchedConfig | HostConfig) -> HostConfig:
    """执行稠密子图的主机线程组"""
    if isinstance(cfg, HostConfig):
        return cfg
    if cfg.host is not None:
        return cfg.host
    if cfg.leftover is not None:
        return cfg.leftover
    return cfg.sparse_host


def sparse_group(cfg: SchedConfig | HostConfig) -> HostConfig:
    """执行稀疏子图的主机线程组"""
    if isinstance(cfg, HostConfig):
        return cfg
    if cfg.strategy.kind == StrategyKind.MODEL_BASED:
        return cfg.host
    return cfg.sparse_host


def occupied_cores(cfg: SchedConfig | HostConfig) -> int:
    return cfg.cores if isinstance(cfg, HostConfig) else cfg.host_cores


def dense_seconds_per_item(
    model: ModelSpec,
    server: ServerSpec,
    group: HostConfig,
    occupied: int,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> float:
    """单样本稠密计算时间"""
    throughput = (
        group.o
        * server.cpu.core_flops
        * calibration.eff(group.o)
        * calibration.interf(occupied, server.cpu.cores)
    )
    seconds = fp.dense_flops_per_item(model) / throughput
    if calibration.operator_fusion:
        seconds *= 1.0 - calibration.fusion_discount
    return seconds


def dense_latency(
    model: ModelSpec,
    server: ServerSpec,
    cfg: SchedConfig | HostConfig,
    batch: int,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> float:
    """主机上一个批次的稠密子图时延

    t = FLOPs(batch) / (o * 单核峰值 * eff(o) * interf(m, o))
    """
    if batch < 1:
        error_msg = "批大小必须大于等于1"
        raise ValueError(error_msg)
    group = dense_group(cfg)
    return batch * dense_seconds_per_item(model, server, group, occupied_cores(cfg), calibration)


def effective_bandwidth(
    model: ModelSpec,
    server: ServerSpec,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> float:
    """主机嵌入读取的有效带宽（字节/秒），近存计算只加速 Gather-Reduce"""
    bandwidth = server.memory.bandwidth_gbps * GB * calibration.host_gather_efficiency
    if model.has_pooling:
        bandwidth *= server.memory.nmp_factor
    return bandwidth


def sparse_seconds_per_item(
    model: ModelSpec,
    server: ServerSpec,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> float:
    """独占全部有效带宽时单样本的嵌入读取时间"""
    return fp.sparse_bytes_per_item(model, calibration.bytes_per_element) / effective_bandwidth(
        model, server, calibration,
    )


def sparse_latency(
    model: ModelSpec,
    server: ServerSpec,
    cfg: SchedConfig | HostConfig,
    batch: int,
    calibration: Calibration = DEFAULT_CALIBRATION,
    active_threads: int | None = None,
    lookup_fraction: float = 1.0,
) -> float:
    """主机上一个批次的稀疏子图时延

    t = bytes * active_threads / BW_eff，带宽在并发访问的线程间均分
    """
    if batch < 1:
        error_msg = "批大小必须大于等于1"
        raise ValueError(error_msg)
    active = active_threads if active_threads is not None else sparse_group(cfg).m
    return batch * lookup_fraction * sparse_seconds_per_item(model, server, calibration) * active


def accel_payload_bytes_per_item(
    model: ModelSpec,
    strategy: StrategyKind,
    hot_hit_rate: float = 1.0,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> float:
    """每个样本经PCIe送入加速器的字节数

    S-D流水送入池化后的嵌入；热表在加速器时送入热索引，未命中部分送入Psum（不池化的表直接送行数据）
    """
    element = calibration.bytes_per_element
    payload = fp.dense_input_bytes_per_item(model, element)
    if strategy == StrategyKind.SD_PIPELINE_HOST_ACCEL:
        return payload + fp.pooled_bytes_per_item(model, element)
    payload += hot_hit_rate * fp.index_bytes_per_item(model, calibration.index_bytes)
    miss = 1.0 - hot_hit_rate
    if miss > 0:
        if model.has_pooling:
            payload += fp.pooled_bytes_per_item(model, element)
        else:
            payload += miss * fp.sparse_bytes_per_item(model, element)
    return payload


def accel_stage_latencies(
    model: ModelSpec,
    server: ServerSpec,
    cfg: SchedConfig,
    fused_batch: int,
    calibration: Calibration = DEFAULT_CALIBRATION,
    hot_hit_rate: float = 1.0,
) -> StageLatency:
    """加速器上一个融合批次的数据加载与计算时延

    data_load = 输入字节 / (PCIe带宽 / m)，compute = FLOPs / (峰值 * mps_eff(m)) + 算子数 * 启动开销
    """
    if server.accel is None:
        error_msg = f"{server.name}没有加速器"
        raise ValidateErrorException(error_msg)
    if fused_batch < 1:
        error_msg = "融合批大小必须大于等于1"
        raise ValueError(error_msg)
    accel = server.accel
    m = cfg.accel.m if cfg.accel is not None else 1
    kind = cfg.strategy.kind
    pcie = accel.pcie_gbps * GB * calibration.pcie_efficiency
    payload = accel_payload_bytes_per_item(model, kind, hot_hit_rate, calibration)
    data_load = fused_batch * payload / (pcie / m)

    flops = fused_batch * fp.dense_flops_per_item(model)
    compute = flops / (accel.peak_tflops * 1e12 * calibration.mps_eff(m))
    n_ops = fp.dense_op_count(model)
    if kind == StrategyKind.HOT_DENSE_ON_ACCEL:
        # 热表的Gather-Reduce在HBM上完成
        n_ops += model.num_emb_tables
        hot_bytes = fused_batch * hot_hit_rate * fp.sparse_bytes_per_item(model, calibration.bytes_per_element)
        compute += hot_bytes / (accel.hbm_bw_gbps * GB)
    compute += n_ops * calibration.launch_overhead_s
    return StageLatency(data_load_s=data_load, compute_s=compute)


def power_draw(
    server: ServerSpec,
    cfg: SchedConfig | None,
    utilizations: Utilization,
    calibration: Calibration = DEFAULT_CALIBRATION,
) -> float:
    """服务器功耗

    每个组件 P = TDP * (idle_frac + (1 - idle_frac) * util)，加速器只在策略使用时计入，
    近存计算单元的静态功耗始终计入
    """
    util = utilizations.clipped()
    idle = calibration.idle_frac

    def component(tdp: float, u: float) -> float:
        return tdp * (idle + (1.0 - idle) * u)

    watts = component(server.cpu.tdp_w, util.cpu) + component(server.memory.tdp_w, util.memory)
    watts += server.memory.nmp_static_w
    if server.accel is not None and cfg is not None and cfg.strategy.uses_accel:
        watts += component(server.accel.tdp_w, util.accel)
    return watts
