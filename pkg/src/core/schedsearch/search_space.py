from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.catalog import ServerSpec
from src.core.perfmodel import AccelConfig, HostConfig, SchedConfig, SchedulingStrategy, StrategyKind

MIN_BATCH = 16
MAX_BATCH = 4096
MAX_ACCEL_THREADS = 8


def geometric_batches(low: int = MIN_BATCH, high: int = MAX_BATCH) -> list[int]:
    """low, 2*low, ... 不超过 high 的批大小序列"""
    if low < 1 or high < low:
        error_msg = "批大小范围无效"
        raise ValueError(error_msg)
    batches = [low]
    while batches[-1] * 2 <= high:
        batches.append(batches[-1] * 2)
    return batches


class SearchSpace(BaseModel):
    """离散化的并行空间 P_sp(M+D+O)，批大小以下标表示"""

    model_config = ConfigDict(frozen=True)

    cores: int = Field(gt=0)
    batches: list[int] = Field(default_factory=geometric_batches)
    accel_threads: int = Field(default=MAX_ACCEL_THREADS, ge=1)
    accel_batches: list[int] = Field(default_factory=geometric_batches)

    @field_validator("batches", "accel_batches")
    @classmethod
    def validate_batches(cls, value: list[int]) -> list[int]:
        if not value or any(b < 1 for b in value) or value != sorted(set(value)):
            error_msg = "批大小序列必须非空、为正且严格递增"
            raise ValueError(error_msg)
        return value

    @classmethod
    def for_server(
        cls,
        server: ServerSpec,
        batches: list[int] | None = None,
        accel_threads: int = MAX_ACCEL_THREADS,
    ) -> "SearchSpace":
        return cls(
            cores=server.cpu.cores,
            batches=batches or geometric_batches(),
            accel_threads=accel_threads,
            accel_batches=batches or geometric_batches(),
        )

    def max_m(self, strategy: SchedulingStrategy, o: int) -> int:
        """给定 o 时主机搜索线程组的最大线程数"""
        if strategy.kind == StrategyKind.SD_PIPELINE_HOST_ONLY:
            # 至少留一个核心给稠密线程
            return max((self.cores - 1) // o, 0)
        return self.cores // o

    def o_values(self, strategy: SchedulingStrategy) -> list[int]:
        return [o for o in range(1, self.cores + 1) if self.max_m(strategy, o) >= 1]

    def host_points(self, strategy: SchedulingStrategy) -> list[tuple[int, int, int]]:
        """全部主机侧 (o, m, d下标)"""
        return [
            (o, m, di)
            for o in self.o_values(strategy)
            for m in range(1, self.max_m(strategy, o) + 1)
            for di in range(len(self.batches))
        ]

    def accel_points(self) -> list[tuple[int, int]]:
        return [(m, di) for m in range(1, self.accel_threads + 1) for di in range(len(self.accel_batches))]

    def grid_size(self, strategy: SchedulingStrategy) -> int:
        size = len(self.host_points(strategy))
        if strategy.uses_accel:
            size *= len(self.accel_points())
        return size

    def contains(self, strategy: SchedulingStrategy, o: int, m: int, di: int) -> bool:
        return 1 <= o and 1 <= m <= self.max_m(strategy, o) and 0 <= di < len(self.batches)

    def contains_accel(self, m: int, di: int) -> bool:
        return 1 <= m <= self.accel_threads and 0 <= di < len(self.accel_batches)

    def build_config(
        self,
        strategy: SchedulingStrategy,
        o: int,
        m: int,
        di: int,
        accel: tuple[int, int] | None = None,
    ) -> SchedConfig:
        """把网格点映射为完整配置

        S-D主机流水中 (m, o) 描述稀疏线程，剩余核心全部作为 o=1 的稠密线程；
        热表上加速器时剩余核心按子策略运行，S-D子策略至少需要2个剩余核心
        """
        d = self.batches[di]
        group = HostConfig(m=m, o=o, d=d)
        kind = strategy.kind
        if kind == StrategyKind.MODEL_BASED:
            return SchedConfig(strategy=strategy, host=group)
        rest = self.cores - group.cores
        if kind == StrategyKind.SD_PIPELINE_HOST_ONLY:
            return SchedConfig(strategy=strategy, sparse_host=group, host=HostConfig(m=rest, o=1, d=d))
        if accel is None:
            error_msg = f"{strategy.name}需要加速器侧配置"
            raise ValueError(error_msg)
        accel_cfg = AccelConfig(m=accel[0], d=self.accel_batches[accel[1]])
        if kind == StrategyKind.SD_PIPELINE_HOST_ACCEL:
            return SchedConfig(strategy=strategy, sparse_host=group, accel=accel_cfg)
        needed = 2 if strategy.leftover == StrategyKind.SD_PIPELINE_HOST_ONLY else 1
        leftover = HostConfig(m=rest, o=1, d=d) if rest >= needed else None
        return SchedConfig(strategy=strategy, sparse_host=group, accel=accel_cfg, leftover=leftover)
