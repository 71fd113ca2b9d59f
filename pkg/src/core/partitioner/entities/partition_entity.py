import math
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# 广义调和数精确求和的项数上限，超出部分使用欧拉-麦克劳林近似
EXACT_HARMONIC_TERMS = 1 << 20


@lru_cache(maxsize=4)
def _harmonic_prefix(s: float) -> np.ndarray:
    terms = np.arange(1, EXACT_HARMONIC_TERMS + 1, dtype=np.float64) ** (-s)
    return np.concatenate([[0.0], np.cumsum(terms)])


def harmonic(n: float, s: float) -> float:
    """广义调和数 H(n, s) = sum_{k=1..n} k^-s"""
    n = int(n)
    if n <= 0:
        return 0.0
    prefix = _harmonic_prefix(float(s))
    if n <= EXACT_HARMONIC_TERMS:
        return float(prefix[n])
    m = EXACT_HARMONIC_TERMS

    def f(x: float) -> float:
        return x ** (-s)

    def df(x: float) -> float:
        return -s * x ** (-s - 1)

    if math.isclose(s, 1.0):
        integral = math.log(n / m)
    else:
        integral = (n ** (1 - s) - m ** (1 - s)) / (1 - s)
    tail = integral + (f(n) - f(m)) / 2 + (df(n) - df(m)) / 12
    return float(prefix[m]) + tail


class TableProfile(BaseModel):
    """单张嵌入表的访问画像

    行按Zipf流行度排序，名次 r（从0开始）对应的行号为 (a * r + b) mod rows
    """

    model_config = ConfigDict(frozen=True)

    rows: int = Field(gt=0)
    weight: float = Field(gt=0)  # 每个样本对该表的平均查找次数
    multiplier: int = Field(gt=0)
    offset: int = Field(ge=0)

    def rank_to_row(self, ranks: np.ndarray) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=np.int64)
        return (ranks * self.multiplier + self.offset) % self.rows


class AccessProfile(BaseModel):
    """模型各表的行访问频率排序"""

    model_config = ConfigDict(frozen=True)

    zipf_s: float = Field(gt=0)
    tables: list[TableProfile]

    def table_harmonic(self, table: int) -> float:
        return harmonic(self.tables[table].rows, self.zipf_s)

    def frequency(self, table: int, rank: int) -> float:
        """名次 rank（从0开始）的行每个样本的期望访问次数"""
        profile = self.tables[table]
        return profile.weight * (rank + 1) ** (-self.zipf_s) / self.table_harmonic(table)

    def table_hit_rate(self, table: int, hot_rows: int) -> float:
        """该表前 hot_rows 名的访问占比"""
        rows = self.tables[table].rows
        hot_rows = min(max(int(hot_rows), 0), rows)
        if hot_rows == rows:
            return 1.0
        return harmonic(hot_rows, self.zipf_s) / self.table_harmonic(table)

    def hit_rate(self, hot_rows: list[int]) -> float:
        """按查找次数加权的整体命中率"""
        total = sum(t.weight for t in self.tables)
        if total == 0:
            return 1.0
        hits = sum(t.weight * self.table_hit_rate(i, k) for i, (t, k) in enumerate(zip(self.tables, hot_rows, strict=True)))
        return hits / total


class DenseSubgraph(BaseModel):
    """稠密子图描述"""

    bottom_fc: list[int]
    predict_fc: list[int]
    predict_fc_replicas: int
    attention_kind: str
    attention_fc: list[int]
    weight_bytes: float


class TableDescriptor(BaseModel):
    """嵌入表描述"""

    rows: int
    dim: int
    bytes: float


class PartitionPlan(BaseModel):
    """硬件感知的模型划分方案"""

    model: str
    server: str
    co_location: int = Field(ge=1)
    dense: DenseSubgraph
    sparse_full: list[TableDescriptor]
    sparse_hot: list[int]  # 每张表的热行数（访问频率名次的前缀）
    hot_hit_rate: float = Field(ge=0, le=1)
    hot_bytes: float = Field(ge=0)
    budget_bytes: float
    placement: dict[str, str]

    def hot_rows(self, profile: AccessProfile, table: int) -> np.ndarray:
        """该表热行的行号"""
        return profile.tables[table].rank_to_row(np.arange(self.sparse_hot[table]))
