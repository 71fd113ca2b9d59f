from typing import Literal
from typing_extensions import Self

import numpy as np
from pydantic import BaseModel, Field, model_validator

Policy = Literal["hercules", "greedy", "nh", "priority"]
RMode = Literal["fixed", "estimated"]
RankBy = Literal["qps", "qps_per_watt"]


class LPInstance(BaseModel):
    """集群供给问题：最小化总功耗，满足负载(含超额供给率)与各类服务器数量上限"""

    servers: list[str]  # H 种服务器类型
    workloads: list[str]  # M 个工作负载
    qps: list[list[float]]  # H x M
    power: list[list[float]]  # H x M
    loads: list[float]  # 每个工作负载的到达率
    overprovision_pct: list[float]  # 每个工作负载的 R%
    availability: list[int]  # 每种服务器的可用台数

    @model_validator(mode="after")
    def validate_instance(self) -> Self:
        h, m = len(self.servers), len(self.workloads)
        if len(self.qps) != h or any(len(row) != m for row in self.qps):
            error_msg = "qps矩阵维度与服务器、工作负载数量不一致"
            raise ValueError(error_msg)
        if len(self.power) != h or any(len(row) != m for row in self.power):
            error_msg = "power矩阵维度与服务器、工作负载数量不一致"
            raise ValueError(error_msg)
        if len(self.loads) != m or len(self.overprovision_pct) != m or len(self.availability) != h:
            error_msg = "负载、超额供给率或可用台数的长度不一致"
            raise ValueError(error_msg)
        values = [v for row in self.qps + self.power for v in row] + self.loads + self.overprovision_pct
        if any(v < 0 for v in values) or any(n < 0 for n in self.availability):
            error_msg = "QPS、功耗、负载与可用台数必须非负"
            raise ValueError(error_msg)
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.servers), len(self.workloads)

    @property
    def qps_matrix(self) -> np.ndarray:
        return np.asarray(self.qps, dtype=float)

    @property
    def power_matrix(self) -> np.ndarray:
        return np.asarray(self.power, dtype=float)

    @property
    def demand(self) -> np.ndarray:
        """每个工作负载需要满足的容量 load * (1 + R%)"""
        return np.asarray(self.loads) * (1.0 + np.asarray(self.overprovision_pct) / 100.0)

    def to_standard(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """转换为 min c·x, A·x <= b 形式，变量按 (h, m) 行优先排列

        前 M 行为负载约束（取负号），后 H 行为数量约束；QPS 为0的变量由数量约束外的上界行置0
        """
        h, m = self.shape
        qps = self.qps_matrix
        c = self.power_matrix.ravel()
        rows = []
        rhs = []
        for j in range(m):
            row = np.zeros(h * m)
            row[j::m] = -qps[:, j]
            rows.append(row)
            rhs.append(-self.demand[j])
        for i in range(h):
            row = np.zeros(h * m)
            row[i * m : (i + 1) * m] = 1.0
            rows.append(row)
            rhs.append(self.availability[i])
        zero = np.flatnonzero(qps.ravel() <= 0)
        for index in zero:
            row = np.zeros(h * m)
            row[index] = 1.0
            rows.append(row)
            rhs.append(0.0)
        return c, np.asarray(rows).reshape(-1, h * m), np.asarray(rhs, dtype=float)


class AllocationMatrix(BaseModel):
    """N[h][m]：分配给工作负载 m 的 h 类服务器台数"""

    servers: list[str]
    workloads: list[str]
    counts: list[list[int]]
    timestamp: float = 0.0

    @model_validator(mode="after")
    def validate_counts(self) -> Self:
        if len(self.counts) != len(self.servers) or any(len(r) != len(self.workloads) for r in self.counts):
            error_msg = "分配矩阵维度不一致"
            raise ValueError(error_msg)
        if any(n < 0 for row in self.counts for n in row):
            error_msg = "分配台数必须非负"
            raise ValueError(error_msg)
        return self

    @classmethod
    def from_array(cls, instance: LPInstance, array: np.ndarray, timestamp: float = 0.0) -> "AllocationMatrix":
        return cls(
            servers=instance.servers,
            workloads=instance.workloads,
            counts=[[int(v) for v in row] for row in np.asarray(array)],
            timestamp=timestamp,
        )

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64).reshape(len(self.servers), len(self.workloads))

    @property
    def total_servers(self) -> int:
        return int(self.array.sum())

    def objective(self, instance: LPInstance) -> float:
        """总供给功耗"""
        return float((self.array * instance.power_matrix).sum())


class ClusterState(BaseModel):
    """集群状态表：各类服务器的在役台数与待激活台数"""

    servers: list[str]
    workloads: list[str]
    availability: list[int]
    active: list[list[int]]
    pending: list[tuple[float, int, int, int]] = Field(default_factory=list)  # (就绪时刻, h, m, 台数)
    activated: int = 0
    released: int = 0

    @classmethod
    def empty(cls, servers: list[str], workloads: list[str], availability: list[int]) -> "ClusterState":
        return cls(
            servers=servers,
            workloads=workloads,
            availability=availability,
            active=[[0] * len(workloads) for _ in servers],
        )

    def pending_counts(self) -> np.ndarray:
        counts = np.zeros((len(self.servers), len(self.workloads)), dtype=np.int64)
        for _, h, m, n in self.pending:
            counts[h, m] += n
        return counts

    def committed(self) -> np.ndarray:
        """在役加待激活"""
        return np.asarray(self.active, dtype=np.int64) + self.pending_counts()

    def promote(self, now: float) -> None:
        """就绪时刻已到的待激活服务器转为在役"""
        remaining = []
        for ready, h, m, n in self.pending:
            if ready <= now:
                self.active[h][m] += n
                self.activated += n
            else:
                remaining.append((ready, h, m, n))
        self.pending = remaining

    def apply(self, target: np.ndarray, now: float, setup_delay_s: float) -> None:
        """向目标分配过渡：先释放（优先取消待激活），再登记新的待激活"""
        committed = self.committed()
        for h in range(len(self.servers)):
            for m in range(len(self.workloads)):
                surplus = int(committed[h, m] - target[h, m])
                if surplus <= 0:
                    continue
                kept = []
                # 从最晚就绪的待激活开始取消
                for ready, ph, pm, n in sorted(self.pending, key=lambda p: -p[0]):
                    if (ph, pm) == (h, m) and surplus > 0:
                        cancel = min(n, surplus)
                        surplus -= cancel
                        n -= cancel
                    if n > 0:
                        kept.append((ready, ph, pm, n))
                self.pending = sorted(kept, key=lambda p: p[0])
                if surplus > 0:
                    self.active[h][m] -= surplus
                    self.released += surplus
        committed = self.committed()
        for h in range(len(self.servers)):
            for m in range(len(self.workloads)):
                deficit = int(target[h, m] - committed[h, m])
                if deficit > 0:
                    self.pending.append((now + setup_delay_s, h, m, deficit))
        self.promote(now)
        if np.any(self.committed().sum(axis=1) > np.asarray(self.availability)):
            error_msg = "在役与待激活台数超过可用台数"
            raise ValueError(error_msg)


class IntervalRecord(BaseModel):
    """一个供给区间的结果"""

    time_s: float
    loads: list[float]
    overprovision_pct: list[float]
    counts: list[list[int]]
    servers: int
    power_w: float
    infeasible: bool = False


class ViolationEvent(BaseModel):
    """供给过程中的约束违反事件"""

    time_s: float
    kind: Literal["infeasible", "load", "capacity"]
    workload: str = ""
    detail: str = ""


class ProvisionSummary(BaseModel):
    policy: str
    peak_servers: int
    avg_servers: float
    peak_power_w: float
    avg_power_w: float
    load_violations: int  # 负载约束被违反的轨迹点数
    capacity_violations: int  # 数量约束被违反的区间数
    infeasible_intervals: int


class ProvisionTimeline(BaseModel):
    """一个策略在整条轨迹上的供给时间线"""

    policy: str
    interval_s: float
    servers: list[str]
    workloads: list[str]
    records: list[IntervalRecord] = Field(default_factory=list)
    violations: list[ViolationEvent] = Field(default_factory=list)
    activated: int = 0
    released: int = 0

    def summary(self) -> ProvisionSummary:
        servers = [r.servers for r in self.records] or [0]
        power = [r.power_w for r in self.records] or [0.0]
        return ProvisionSummary(
            policy=self.policy,
            peak_servers=max(servers),
            avg_servers=float(np.mean(servers)),
            peak_power_w=max(power),
            avg_power_w=float(np.mean(power)),
            load_violations=sum(1 for v in self.violations if v.kind == "load"),
            capacity_violations=sum(1 for v in self.violations if v.kind == "capacity"),
            infeasible_intervals=sum(1 for r in self.records if r.infeasible),
        )

    def to_rows(self) -> list[list[str]]:
        """列式输出：每个 (区间, 服务器类型, 工作负载) 一行"""
        rows = [["policy", "time_s", "server", "workload", "count", "power_w"]]
        for record in self.records:
            for h, server in enumerate(self.servers):
                for m, workload in enumerate(self.workloads):
                    count = record.counts[h][m]
                    if count:
                        rows.append([self.policy, repr(record.time_s), server, workload, str(count), ""])
            rows.append([self.policy, repr(record.time_s), "*", "*", str(record.servers), repr(record.power_w)])
        return rows
