import numpy as np

from src.core.catalog import ModelSpec

from .entities.query_entity import QuerySizeDistribution, QueryStream

# 长尾池化时从范围最高的10%中抽取
POOLING_TAIL_DECILE = 0.9


def sample_pooling(
    model: ModelSpec,
    rng: np.random.Generator,
    count: int,
    pooling_tail: float = 0.0,
) -> np.ndarray:
    """按目录中的查找范围为每个查询的每张表抽取池化因子

    Args:
        model: 模型规格
        rng: 随机数生成器
        count: 查询个数
        pooling_tail: 从范围上部十分位抽取的概率

    Returns:
        np.ndarray: 形状 (count, 表数) 的整数矩阵，one-hot 表恒为 1

    """
    ranges = model.table_lookup_ranges()
    pooling = np.ones((count, len(ranges)), dtype=np.int64)
    for column, lookup_range in enumerate(ranges):
        low, high = lookup_range.low, lookup_range.high
        if low == high:
            pooling[:, column] = low
            continue
        values = rng.integers(low, high + 1, size=count)
        if pooling_tail > 0:
            tail_low = low + int(np.floor((high - low) * POOLING_TAIL_DECILE))
            tail = rng.integers(tail_low, high + 1, size=count)
            use_tail = rng.uniform(size=count) < pooling_tail
            values = np.where(use_tail, tail, values)
        pooling[:, column] = values
    return pooling


def gen_query_stream(
    rate_qps: float,
    duration_s: float,
    model: ModelSpec,
    seed: int,
    size_dist: QuerySizeDistribution | None = None,
    pooling_tail: float = 0.0,
    hot_hit_rate: float | None = None,
) -> QueryStream:
    """生成泊松到达的查询流

    到达间隔服从均值 1/rate 的指数分布，查询规模服从截断对数正态分布，
    给出热表命中率时按二项分布抽取每个查询的命中比例
    """
    if rate_qps <= 0 or duration_s <= 0:
        error_msg = "到达率与时长必须为正数"
        raise ValueError(error_msg)
    size_dist = size_dist or QuerySizeDistribution()
    rng = np.random.default_rng(seed)

    # 1.按块生成到达间隔，直到超过时长
    expected = rate_qps * duration_s
    chunk = int(expected + 6 * np.sqrt(expected) + 16)
    gaps = rng.exponential(1.0 / rate_qps, size=chunk)
    arrivals = np.cumsum(gaps)
    while arrivals[-1] <= duration_s:
        more = np.cumsum(rng.exponential(1.0 / rate_qps, size=chunk)) + arrivals[-1]
        arrivals = np.concatenate([arrivals, more])
    arrivals = arrivals[arrivals <= duration_s]
    count = int(arrivals.shape[0])

    # 2.查询规模与池化因子
    sizes = size_dist.sample(rng, count)
    pooling = sample_pooling(model, rng, count, pooling_tail)

    return QueryStream(
        arrival_times=arrivals,
        sizes=sizes,
        pooling=pooling,
        hot_hits=sample_hot_hits(rng, sizes, pooling, hot_hit_rate),
    )


def sample_hot_hits(
    rng: np.random.Generator,
    sizes: np.ndarray,
    pooling: np.ndarray,
    hot_hit_rate: float | None,
) -> np.ndarray:
    """每个查询命中热表的查找比例：查找次数为 规模 x 各表池化因子之和，命中数服从二项分布"""
    count = int(sizes.shape[0])
    if hot_hit_rate is None or hot_hit_rate >= 1.0:
        return np.ones(count)
    lookups = np.maximum(pooling.sum(axis=1) * sizes, 1)
    return np.asarray(rng.binomial(lookups, max(hot_hit_rate, 0.0)) / lookups, dtype=float)
