import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing_extensions import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm


class QuerySizeDistribution(BaseModel):
    """截断对数正态的查询规模分布，取值为 [low, high] 上的整数

    整数 k 的概率为连续分布落在 (k-0.5, k+0.5] 与区间交集上的质量，
    采样与解析公式使用同一离散分布
    """

    model_config = ConfigDict(frozen=True)

    mu: float = math.log(100)
    sigma: float = Field(default=1.0, gt=0)
    low: int = Field(default=10, gt=0)
    high: int = Field(default=1000, gt=0)

    @model_validator(mode="after")
    def validate_bounds(self) -> Self:
        if self.low > self.high:
            error_msg = "查询规模下界不能大于上界"
            raise ValueError(error_msg)
        return self

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return norm.cdf((np.log(x) - self.mu) / self.sigma)

    @cached_property
    def support(self) -> np.ndarray:
        return np.arange(self.low, self.high + 1, dtype=np.int64)

    @cached_property
    def pmf(self) -> np.ndarray:
        k = self.support.astype(float)
        upper = np.minimum(k + 0.5, self.high)
        lower = np.maximum(k - 0.5, self.low)
        mass = self._cdf(upper) - self._cdf(lower)
        total = mass.sum()
        if total <= 0:
            # 分布质量全部落在区间外时退化为区间中点
            mass = np.zeros_like(k)
            mass[len(mass) // 2] = 1.0
            total = 1.0
        return mass / total

    @cached_property
    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    def expected_subqueries(self, batch: int) -> float:
        """E[ceil(n / batch)]，即一个查询拆分出的子查询个数期望"""
        return float(np.dot(np.ceil(self.support / batch), self.pmf))

    def quantile(self, p: float) -> int:
        """满足 P(n <= k) >= p 的最小整数 k"""
        cdf = np.cumsum(self.pmf)
        index = int(np.searchsorted(cdf, min(p, 1.0) - 1e-12, side="left"))
        return int(self.support[min(index, len(self.support) - 1)])

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """逆变换采样后四舍五入到整数"""
        lo = float(norm.cdf((math.log(self.low) - self.mu) / self.sigma))
        hi = float(norm.cdf((math.log(self.high) - self.mu) / self.sigma))
        u = rng.uniform(lo, hi, size=count)
        values = np.exp(self.mu + self.sigma * norm.ppf(u))
        return np.clip(np.rint(values), self.low, self.high).astype(np.int64)


@dataclass(frozen=True, slots=True)
class Query:
    """单个推理查询"""

    arrival_time: float  # 到达时刻，单位秒
    size: int  # 样本数（工作集规模）
    per_table_pooling: tuple[int, ...]  # 每张表每个样本的稀疏索引数
    hot_hit_fraction: float = 1.0  # 命中加速器热表的查找比例


@dataclass(frozen=True)
class QueryStream:
    """查询流，按列存储"""

    arrival_times: np.ndarray
    sizes: np.ndarray
    pooling: np.ndarray  # 形状 (查询数, 表数)
    hot_hits: np.ndarray

    def __len__(self) -> int:
        return int(self.arrival_times.shape[0])

    def __getitem__(self, index: int) -> Query:
        return Query(
            arrival_time=float(self.arrival_times[index]),
            size=int(self.sizes[index]),
            per_table_pooling=tuple(int(p) for p in self.pooling[index]),
            hot_hit_fraction=float(self.hot_hits[index]),
        )

    def __iter__(self):  # noqa: ANN204
        for index in range(len(self)):
            yield self[index]

    def digest(self) -> str:
        """查询流内容摘要，用于比较两个查询流是否逐字节一致"""
        h = hashlib.sha256()
        for array in (self.arrival_times, self.sizes, self.pooling, self.hot_hits):
            h.update(np.ascontiguousarray(array).tobytes())
        return h.hexdigest()
