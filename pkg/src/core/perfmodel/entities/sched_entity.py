from enum import Enum
from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrategyKind(str, Enum):
    """调度策略类型"""

    MODEL_BASED = "model_based"  # 每个推理线程执行完整模型
    SD_PIPELINE_HOST_ONLY = "sd_pipeline_host_only"  # 主机上稀疏/稠密线程流水
    SD_PIPELINE_HOST_ACCEL = "sd_pipeline_host_accel"  # 主机稀疏 + 加速器稠密
    HOT_DENSE_ON_ACCEL = "hot_dense_on_accel"  # 热表与稠密子图在加速器，主机处理冷数据


ACCEL_KINDS = (StrategyKind.SD_PIPELINE_HOST_ACCEL, StrategyKind.HOT_DENSE_ON_ACCEL)
LEFTOVER_KINDS = (StrategyKind.MODEL_BASED, StrategyKind.SD_PIPELINE_HOST_ONLY)


class SchedulingStrategy(BaseModel):
    """调度策略，HOT_DENSE_ON_ACCEL 额外指定剩余主机核心的子策略"""

    model_config = ConfigDict(frozen=True)

    kind: StrategyKind
    leftover: StrategyKind | None = None

    @model_validator(mode="after")
    def validate_strategy(self) -> Self:
        if self.kind == StrategyKind.HOT_DENSE_ON_ACCEL:
            if self.leftover not in LEFTOVER_KINDS:
                error_msg = "hot_dense_on_accel必须指定剩余核心子策略"
                raise ValueError(error_msg)
        elif self.leftover is not None:
            error_msg = f"{self.kind.value}不支持剩余核心子策略"
            raise ValueError(error_msg)
        return self

    @property
    def uses_accel(self) -> bool:
        return self.kind in ACCEL_KINDS

    @property
    def name(self) -> str:
        if self.leftover is None:
            return self.kind.value
        return f"{self.kind.value}+{self.leftover.value}"

    @classmethod
    def parse(cls, name: str) -> "SchedulingStrategy":
        """从 name 形式还原策略"""
        kind, _, leftover = name.partition("+")
        return cls(kind=StrategyKind(kind), leftover=StrategyKind(leftover) if leftover else None)


class HostConfig(BaseModel):
    """主机侧线程组：线程数 m、每线程核心数 o、批大小 d"""

    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    o: int = Field(default=1, ge=1)
    d: int = Field(ge=1)

    @property
    def cores(self) -> int:
        return self.m * self.o


class AccelConfig(BaseModel):
    """加速器侧：共置推理线程数 m 与融合批大小 d"""

    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    d: int = Field(ge=1)


class SchedConfig(BaseModel):
    """并行空间中的一个点

    - MODEL_BASED: host 为完整模型线程
    - SD_PIPELINE_HOST_ONLY: sparse_host 为稀疏线程，host 为稠密线程（o=1）
    - SD_PIPELINE_HOST_ACCEL: sparse_host 为主机稀疏线程，accel 为加速器稠密线程
    - HOT_DENSE_ON_ACCEL: sparse_host 为主机冷数据稀疏线程，accel 为加速器线程，
      leftover 为剩余主机核心（o=1），按 strategy.leftover 运行
    """

    model_config = ConfigDict(frozen=True)

    strategy: SchedulingStrategy
    host: HostConfig | None = None
    sparse_host: HostConfig | None = None
    accel: AccelConfig | None = None
    leftover: HostConfig | None = None

    @model_validator(mode="after")
    def validate_config(self) -> Self:
        kind = self.strategy.kind
        required = {
            StrategyKind.MODEL_BASED: ("host",),
            StrategyKind.SD_PIPELINE_HOST_ONLY: ("host", "sparse_host"),
            StrategyKind.SD_PIPELINE_HOST_ACCEL: ("sparse_host", "accel"),
            StrategyKind.HOT_DENSE_ON_ACCEL: ("sparse_host", "accel"),
        }[kind]
        for name in required:
            if getattr(self, name) is None:
                error_msg = f"{kind.value}策略缺少{name}配置"
                raise ValueError(error_msg)
        if self.accel is not None and not self.strategy.uses_accel:
            error_msg = f"{kind.value}策略不使用加速器"
            raise ValueError(error_msg)
        if self.leftover is not None and kind != StrategyKind.HOT_DENSE_ON_ACCEL:
            error_msg = "只有hot_dense_on_accel可以配置剩余核心"
            raise ValueError(error_msg)
        if kind == StrategyKind.SD_PIPELINE_HOST_ONLY and self.host is not None and self.host.o != 1:
            error_msg = "稠密线程每线程只使用一个核心"
            raise ValueError(error_msg)
        return self

    @property
    def host_cores(self) -> int:
        """占用的主机物理核心数"""
        return sum(group.cores for group in (self.host, self.sparse_host, self.leftover) if group is not None)

    @property
    def search_group(self) -> HostConfig:
        """搜索所在的主机线程组"""
        return self.host if self.strategy.kind == StrategyKind.MODEL_BASED else self.sparse_host

    def key(self) -> tuple:
        """可排序、可哈希的配置键"""
        group = self.search_group
        accel = (self.accel.m, self.accel.d) if self.accel is not None else (0, 0)
        return (self.strategy.name, group.o, group.m, group.d, *accel)


class StageLatency(BaseModel):
    """阶段时延分解，单位秒"""

    queueing_s: float = Field(default=0.0, ge=0)
    data_load_s: float = Field(default=0.0, ge=0)
    compute_s: float = Field(default=0.0, ge=0)
    comm_s: float = Field(default=0.0, ge=0)

    @property
    def total_s(self) -> float:
        return self.queueing_s + self.data_load_s + self.compute_s + self.comm_s

    def __add__(self, other: "StageLatency") -> "StageLatency":
        return StageLatency(
            queueing_s=self.queueing_s + other.queueing_s,
            data_load_s=self.data_load_s + other.data_load_s,
            compute_s=self.compute_s + other.compute_s,
            comm_s=self.comm_s + other.comm_s,
        )

    def scaled(self, factor: float) -> "StageLatency":
        return StageLatency(
            queueing_s=self.queueing_s * factor,
            data_load_s=self.data_load_s * factor,
            compute_s=self.compute_s * factor,
            comm_s=self.comm_s * factor,
        )
