import logging
import math

import numpy as np

from pkg.simplex import check_optimality, solve
from src.core.schedsearch import EfficiencyTable
from src.exception import InfeasibleException, InternalErrorException

from .entities.provision_entity import AllocationMatrix, LPInstance, RankBy

logger = logging.getLogger(__name__)

# 负载约束判定的相对容差
LOAD_TOLERANCE = 1e-9
# 随机分配失败后重试的子种子数
NH_RETRIES = 32


def build_lp(
    table: EfficiencyTable,
    loads: dict[str, float],
    overprovision_pct: float | dict[str, float],
    availability: dict[str, int],
) -> LPInstance:
    """由效率表构建供给问题

    Raises:
        InfeasibleException: 某个工作负载在所有服务器类型上的QPS都为0

    """
    workloads = list(loads)
    servers = list(availability)
    if isinstance(overprovision_pct, dict):
        r_pct = [float(overprovision_pct.get(w, 0.0)) for w in workloads]
    else:
        r_pct = [float(overprovision_pct)] * len(workloads)
    qps = [[table.qps(w, s) for w in workloads] for s in servers]
    power = [[table.power(w, s) for w in workloads] for s in servers]
    for j, workload in enumerate(workloads):
        if all(qps[i][j] <= 0 for i in range(len(servers))):
            error_msg = f"工作负载{workload}在所有服务器类型上的QPS都为0"
            raise InfeasibleException(error_msg, {"workload": workload})
    return LPInstance(
        servers=servers,
        workloads=workloads,
        qps=qps,
        power=power,
        loads=[float(loads[w]) for w in workloads],
        overprovision_pct=r_pct,
        availability=[int(availability[s]) for s in servers],
    )


def solve_lp(instance: LPInstance) -> tuple[np.ndarray, float]:
    """求解线性松弛，返回 (H x M 分数解, 目标值)

    Raises:
        InfeasibleException: 负载约束在数量约束下无法满足，data 中列出无法满足的工作负载

    """
    h, m = instance.shape
    c, a_ub, b_ub = instance.to_standard()
    result = solve(c, a_ub, b_ub)
    if not result.is_optimal:
        blocked = sorted({instance.workloads[i] for kind, i in result.infeasible_rows if kind == "ub" and i < m})
        error_msg = f"线性规划不可行，无法满足的工作负载: {', '.join(blocked) or '未知'}"
        logger.warning(error_msg)
        raise InfeasibleException(
            error_msg,
            {
                "status": result.status.value,
                "workloads": blocked,
                "demand": {w: float(d) for w, d in zip(instance.workloads, instance.demand, strict=True)},
                "capacity": {
                    w: float(np.dot(instance.qps_matrix[:, j], instance.availability))
                    for j, w in enumerate(instance.workloads)
                },
            },
        )
    if not check_optimality(c, a_ub, b_ub, result):
        error_msg = "单纯形解未通过互补松弛校验"
        raise InternalErrorException(error_msg)
    x = np.maximum(result.x.reshape(h, m), 0.0)
    logger.debug("线性规划最优值 %.3f W，%d 次迭代", result.objective, result.iterations)
    return x, float(result.objective)


def check_feasibility(matrix: AllocationMatrix, instance: LPInstance) -> list[str]:
    """独立校验负载约束、数量约束与零QPS项，返回违反描述"""
    counts = matrix.array
    qps = instance.qps_matrix
    problems = []
    capacity = (counts * qps).sum(axis=0)
    for j, workload in enumerate(instance.workloads):
        need = instance.demand[j]
        if capacity[j] < need * (1.0 - LOAD_TOLERANCE) - LOAD_TOLERANCE:
            problems.append(f"{workload}: 容量{capacity[j]:.3f} < 需求{need:.3f}")
    used = counts.sum(axis=1)
    for i, server in enumerate(instance.servers):
        if used[i] > instance.availability[i]:
            problems.append(f"{server}: 使用{used[i]}台 > 可用{instance.availability[i]}台")
    for i, j in zip(*np.nonzero((counts > 0) & (qps <= 0)), strict=True):
        problems.append(f"{instance.servers[i]}/{instance.workloads[j]}: QPS为0却分配了服务器")
    return problems


def _assert_feasible(matrix: AllocationMatrix, instance: LPInstance, source: str) -> AllocationMatrix:
    problems = check_feasibility(matrix, instance)
    if problems:
        error_msg = f"{source}分配违反约束: {'; '.join(problems)}"
        raise InfeasibleException(error_msg, {"violations": problems})
    return matrix


def _units_needed(remaining: float, qps: float) -> int:
    """补足 remaining 所需台数；调用方只在剩余需求超过容差时调用，此时至少一台"""
    if remaining <= 0:
        return 0
    return max(1, math.ceil(remaining / qps - LOAD_TOLERANCE))


def _rank(instance: LPInstance, j: int, rank_by: RankBy) -> list[int]:
    """工作负载 j 的服务器类型排序，平局按声明顺序"""
    qps = instance.qps_matrix[:, j]
    power = instance.power_matrix[:, j]
    if rank_by == "qps_per_watt":
        score = np.where(power > 0, qps / np.where(power > 0, power, 1.0), np.inf)
    else:
        score = qps
    types = [i for i in range(len(instance.servers)) if qps[i] > 0]
    return sorted(types, key=lambda i: (-score[i], i))


def _fill(
    instance: LPInstance,
    counts: np.ndarray,
    j: int,
    order: list[int],
) -> float:
    """按顺序为工作负载 j 消耗服务器直到满足需求，返回剩余需求"""
    qps = instance.qps_matrix
    remaining = instance.demand[j] - float((counts[:, j] * qps[:, j]).sum())
    for i in order:
        if remaining <= LOAD_TOLERANCE * max(1.0, instance.demand[j]):
            break
        spare = instance.availability[i] - int(counts[i].sum())
        take = min(spare, _units_needed(remaining, qps[i, j]))
        if take > 0:
            counts[i, j] += take
            remaining -= take * qps[i, j]
    return remaining


def _workload_order(instance: LPInstance) -> list[int]:
    """按当前需求降序处理工作负载，平局按声明顺序"""
    demand = instance.demand
    return sorted(range(len(instance.workloads)), key=lambda j: (-demand[j], j))


def greedy_allocate(instance: LPInstance, rank_by: RankBy = "qps", best_effort: bool = False) -> AllocationMatrix:
    """贪心：每个工作负载依次占用排名最高的可用服务器

    best_effort 为真时容量不足不报错，返回尽力分配的结果
    """
    h, m = instance.shape
    counts = np.zeros((h, m), dtype=np.int64)
    for j in _workload_order(instance):
        remaining = _fill(instance, counts, j, _rank(instance, j, rank_by))
        if remaining > LOAD_TOLERANCE * max(1.0, instance.demand[j]) and not best_effort:
            error_msg = f"服务器容量不足以满足工作负载{instance.workloads[j]}"
            raise InfeasibleException(error_msg, {"workload": instance.workloads[j], "remaining_qps": remaining})
    matrix = AllocationMatrix.from_array(instance, counts)
    return matrix if best_effort else _assert_feasible(matrix, instance, "贪心")


def priority_allocate(instance: LPInstance, rank_by: RankBy = "qps") -> AllocationMatrix:
    """带优先级的贪心：被多个工作负载争用的服务器类型，优先分配给相对次优类型收益最大的工作负载

    结果不劣于贪心分配
    """
    h, m = instance.shape
    qps = instance.qps_matrix
    counts = np.zeros((h, m), dtype=np.int64)
    ranks = {j: _rank(instance, j, rank_by) for j in range(m)}
    order = _workload_order(instance)
    unmet = set(order)

    def remaining(j: int) -> float:
        return instance.demand[j] - float((counts[:, j] * qps[:, j]).sum())

    while unmet:
        spare = np.asarray(instance.availability) - counts.sum(axis=1)
        choices = []
        for j in order:
            if j not in unmet:
                continue
            if remaining(j) <= LOAD_TOLERANCE * max(1.0, instance.demand[j]):
                unmet.discard(j)
                continue
            available = [i for i in ranks[j] if spare[i] > 0]
            if not available:
                error_msg = f"服务器容量不足以满足工作负载{instance.workloads[j]}"
                raise InfeasibleException(error_msg, {"workload": instance.workloads[j]})
            best = available[0]
            nxt = available[1] if len(available) > 1 else None
            gain = math.inf if nxt is None else qps[best, j] / qps[nxt, j] - 1.0
            choices.append((-gain, order.index(j), j, best))
        if not choices:
            break
        _, _, j, best = min(choices)
        spare_best = int(instance.availability[best] - counts[best].sum())
        counts[best, j] += min(spare_best, _units_needed(remaining(j), qps[best, j]))

    matrix = _assert_feasible(AllocationMatrix.from_array(instance, counts), instance, "优先级")
    try:
        greedy = greedy_allocate(instance, rank_by)
    except InfeasibleException:
        return matrix
    if greedy.objective(instance) < matrix.objective(instance):
        return greedy
    return matrix


def nh_allocate(instance: LPInstance, seed: int = 0) -> AllocationMatrix:
    """随机分配：逐台从有剩余容量的类型中均匀随机选取，失败时换子种子重试"""
    h, m = instance.shape
    qps = instance.qps_matrix
    for attempt in range(NH_RETRIES):
        rng = np.random.default_rng([seed, attempt])
        counts = np.zeros((h, m), dtype=np.int64)
        ok = True
        for j in rng.permutation(m):
            need = instance.demand[j]
            while (counts[:, j] * qps[:, j]).sum() < need * (1.0 - LOAD_TOLERANCE) - LOAD_TOLERANCE:
                spare = np.asarray(instance.availability) - counts.sum(axis=1)
                options = np.flatnonzero((spare > 0) & (qps[:, j] > 0))
                if options.size == 0:
                    ok = False
                    break
                counts[rng.choice(options), j] += 1
            if not ok:
                break
        if ok:
            return _assert_feasible(AllocationMatrix.from_array(instance, counts), instance, "随机")
        logger.debug("随机分配第%d次尝试失败", attempt + 1)
    error_msg = f"随机分配在{NH_RETRIES}次尝试后仍不可行"
    raise InfeasibleException(error_msg, {"seed": seed})


def _repair(instance: LPInstance, counts: np.ndarray) -> np.ndarray:
    """修复向上取整后超出可用台数的类型，再补足负载并裁剪多余台数"""
    qps = instance.qps_matrix
    power = instance.power_matrix
    h, m = instance.shape
    availability = np.asarray(instance.availability)
    penalty = np.where(qps > 0, power / np.where(qps > 0, qps, 1.0), np.inf)

    def surplus(j: int) -> float:
        return float((counts[:, j] * qps[:, j]).sum() - instance.demand[j])

    # 1.超出数量上限的类型：移出单位，优先移出不影响负载约束的
    for i in range(h):
        while counts[i].sum() > availability[i]:
            owners = [j for j in range(m) if counts[i, j] > 0]
            free = [j for j in owners if surplus(j) >= qps[i, j]]
            j = free[0] if free else min(owners, key=lambda k: (penalty[i, k], k))
            counts[i, j] -= 1

    # 2.把缺口转移到单位QPS功耗最低且有剩余的类型
    for j in range(m):
        while surplus(j) < -LOAD_TOLERANCE * max(1.0, instance.demand[j]):
            spare = availability - counts.sum(axis=1)
            options = [i for i in range(h) if spare[i] > 0 and qps[i, j] > 0]
            if not options:
                error_msg = f"取整修复后无法满足工作负载{instance.workloads[j]}"
                raise InfeasibleException(error_msg, {"workload": instance.workloads[j]})
            best = min(options, key=lambda i: (penalty[i, j], i))
            counts[best, j] += min(int(spare[best]), _units_needed(-surplus(j), qps[best, j]))

    # 3.裁剪多余台数，从单位功耗最高的开始
    for j in range(m):
        for i in sorted(range(h), key=lambda k: (-power[k, j], k)):
            while counts[i, j] > 0 and surplus(j) - qps[i, j] >= -LOAD_TOLERANCE * max(1.0, instance.demand[j]):
                counts[i, j] -= 1
    return counts


def round_and_repair(fractional: np.ndarray, instance: LPInstance, rank_by: RankBy = "qps") -> AllocationMatrix:
    """向上取整并修复，结果与贪心、优先级分配比较后取总功耗最小者"""
    counts = np.ceil(np.asarray(fractional) - 1e-7).astype(np.int64)
    counts = np.maximum(counts, 0)
    counts[instance.qps_matrix <= 0] = 0
    repaired = _repair(instance, counts)
    candidates = [("hercules", AllocationMatrix.from_array(instance, repaired))]
    for name, allocate in (("greedy", greedy_allocate), ("priority", priority_allocate)):
        try:
            candidates.append((name, allocate(instance, rank_by)))
        except InfeasibleException:
            continue
    feasible = [(n, a) for n, a in candidates if not check_feasibility(a, instance)]
    if not feasible:
        error_msg = "取整修复后没有满足约束的整数分配"
        raise InfeasibleException(error_msg)
    name, best = min(feasible, key=lambda c: c[1].objective(instance))
    if name != "hercules":
        logger.info("取整修复结果劣于%s分配，改用%s分配", name, name)
    return best


def hercules_allocate(instance: LPInstance, rank_by: RankBy = "qps") -> AllocationMatrix:
    """线性松弛求解后取整修复，rank_by 决定参与比较的贪心与优先级分配的排序方式"""
    fractional, _ = solve_lp(instance)
    return round_and_repair(fractional, instance, rank_by)
