import logging
from dataclasses import dataclass

import numpy as np

from src.core.loadgen import LoadTrace, estimate_overprovision_rate
from src.core.schedsearch import EfficiencyTable, EfficiencyTuple
from src.core.serversim import SimReport
from src.exception import InfeasibleException, ValidateErrorException

from .allocator import (
    LOAD_TOLERANCE,
    build_lp,
    check_feasibility,
    greedy_allocate,
    hercules_allocate,
    nh_allocate,
    priority_allocate,
)
from .entities.provision_entity import (
    AllocationMatrix,
    ClusterState,
    IntervalRecord,
    LPInstance,
    Policy,
    ProvisionSummary,
    ProvisionTimeline,
    RankBy,
    RMode,
    ViolationEvent,
)

logger = logging.getLogger(__name__)

# 估计超额供给率使用的尾部窗口
ESTIMATE_WINDOW_S = 24 * 3600.0
# 效率元组在线更新的衰减系数
REFRESH_DECAY = 0.8


def allocate(instance: LPInstance, policy: Policy, seed: int = 0, rank_by: RankBy = "qps") -> AllocationMatrix:
    """按策略计算一个区间的分配，rank_by 为贪心类策略的服务器排序方式"""
    if policy == "hercules":
        return hercules_allocate(instance, rank_by)
    if policy == "greedy":
        return greedy_allocate(instance, rank_by)
    if policy == "priority":
        return priority_allocate(instance, rank_by)
    if policy == "nh":
        return nh_allocate(instance, seed)
    error_msg = f"未知的供给策略: {policy}"
    raise ValidateErrorException(error_msg)


def _overprovision(trace: LoadTrace, now: float, interval_s: float, r_mode: RMode, r_pct: float) -> float:
    if r_mode == "fixed":
        return r_pct
    history = LoadTrace(
        workload=trace.workload,
        interval_s=trace.interval_s,
        points=[(t, q) for t, q in trace.points if t < now],
    )
    try:
        return estimate_overprovision_rate(history, interval_s, ESTIMATE_WINDOW_S)
    except ValidateErrorException:
        # 历史不足两个区间
        return r_pct


def run_cluster_sim(
    traces: dict[str, LoadTrace],
    table: EfficiencyTable,
    availability: dict[str, int],
    policy: Policy = "hercules",
    interval_s: float = 1800.0,
    setup_delay_s: float = 30.0,
    r_mode: RMode = "fixed",
    r_pct: float = 0.0,
    seed: int = 0,
    rank_by: RankBy = "qps",
) -> ProvisionTimeline:
    """按固定区间推进的集群供给仿真

    每个区间开始时读取边界时刻的负载并计算分配，区间内的增长只能由超额供给率 R 覆盖；
    新激活的服务器经过 setup_delay_s 后生效；区间不可行时记录违反事件并使用尽力分配继续
    """
    if not traces:
        error_msg = "至少需要一条负载轨迹"
        raise ValidateErrorException(error_msg)
    if interval_s <= 0 or setup_delay_s < 0:
        error_msg = "供给区间必须为正数，激活延迟不能为负数"
        raise ValidateErrorException(error_msg)
    workloads = list(traces)
    times = traces[workloads[0]].times
    for workload in workloads[1:]:
        if traces[workload].times != times:
            error_msg = f"轨迹{workload}与{workloads[0]}的时间点不一致"
            raise ValidateErrorException(error_msg)
    servers = list(availability)
    state = ClusterState.empty(servers, workloads, [availability[s] for s in servers])
    timeline = ProvisionTimeline(policy=policy, interval_s=interval_s, servers=servers, workloads=workloads)
    if not times:
        return timeline

    start, end = times[0], times[-1]
    now = start
    while now <= end:
        stop = now + interval_s
        loads = {w: traces[w].load_at(now) for w in workloads}
        r_values = {w: _overprovision(traces[w], now, interval_s, r_mode, r_pct) for w in workloads}
        instance = build_lp(table, loads, r_values, availability)

        infeasible = False
        try:
            matrix = allocate(instance, policy, seed + len(timeline.records), rank_by)
        except InfeasibleException as e:
            infeasible = True
            timeline.violations.append(ViolationEvent(time_s=now, kind="infeasible", detail=e.message))
            logger.warning("区间 t=%.0fs 不可行: %s", now, e.message)
            matrix = greedy_allocate(instance, rank_by, best_effort=True)
        for problem in check_feasibility(matrix, instance):
            if "可用" in problem:
                timeline.violations.append(ViolationEvent(time_s=now, kind="capacity", detail=problem))

        state.apply(matrix.array, now, setup_delay_s)
        timeline.records.append(
            IntervalRecord(
                time_s=now,
                loads=[loads[w] for w in workloads],
                overprovision_pct=[r_values[w] for w in workloads],
                counts=matrix.counts,
                servers=matrix.total_servers,
                power_w=matrix.objective(instance),
                infeasible=infeasible,
            ),
        )

        # 区间内逐个轨迹点检查在役容量是否覆盖实际负载
        qps = instance.qps_matrix
        for t in [t for t in times if now <= t < stop]:
            state.promote(t)
            capacity = (np.asarray(state.active) * qps).sum(axis=0)
            for j, workload in enumerate(workloads):
                need = traces[workload].load_at(t)
                if capacity[j] < need * (1.0 - LOAD_TOLERANCE) - LOAD_TOLERANCE:
                    timeline.violations.append(
                        ViolationEvent(
                            time_s=t,
                            kind="load",
                            workload=workload,
                            detail=f"容量{capacity[j]:.2f} < 需求{need:.2f}",
                        ),
                    )
        now = stop

    timeline.activated = state.activated
    timeline.released = state.released
    summary = timeline.summary()
    logger.info(
        "%s: 峰值%d台/%.1fW，平均%.1f台/%.1fW，负载违反%d次",
        policy, summary.peak_servers, summary.peak_power_w, summary.avg_servers, summary.avg_power_w,
        summary.load_violations,
    )
    return timeline


def savings(summaries: list[ProvisionSummary], baseline: str) -> dict[str, dict[str, float]]:
    """各策略相对 baseline 的峰值与平均功耗节省百分比"""
    base = next((s for s in summaries if s.policy == baseline), None)
    if base is None:
        return {}
    result = {}
    for summary in summaries:
        if summary.policy == baseline:
            continue
        result[summary.policy] = {
            "peak_pct": 100.0 * (1.0 - summary.peak_power_w / base.peak_power_w) if base.peak_power_w > 0 else 0.0,
            "avg_pct": 100.0 * (1.0 - summary.avg_power_w / base.avg_power_w) if base.avg_power_w > 0 else 0.0,
        }
    return result


@dataclass(frozen=True)
class RefreshSample:
    """一次在线测量"""

    model: str
    server: str
    report: SimReport


def refresh_efficiency(
    table: EfficiencyTable,
    samples: list[RefreshSample],
    decay: float = REFRESH_DECAY,
) -> EfficiencyTable:
    """用在线测量按指数滑动平均更新效率元组，功耗不超过离线画像值"""
    entries = {(e.model, e.server): e for e in table.entries}
    for sample in samples:
        key = (sample.model, sample.server)
        entry = entries.get(key)
        if entry is None or not entry.usable:
            continue
        qps = decay * entry.qps + (1.0 - decay) * sample.report.achieved_qps
        power = min(entry.power_w, decay * entry.power_w + (1.0 - decay) * sample.report.avg_power_w)
        entries[key] = EfficiencyTuple(
            model=entry.model,
            server=entry.server,
            qps=qps,
            power_w=power,
            strategy=entry.strategy,
            cfg=entry.cfg,
        )
    return EfficiencyTable(entries=[entries[(e.model, e.server)] for e in table.entries])
