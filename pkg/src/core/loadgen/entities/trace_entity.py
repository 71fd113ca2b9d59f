from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class LoadTrace(BaseModel):
    """负载轨迹，points 为 (时刻秒, 每秒查询数)"""

    model_config = ConfigDict(frozen=True)

    workload: str = ""
    interval_s: float = Field(default=1800.0, gt=0)
    points: list[tuple[float, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_points(self) -> Self:
        for index, (t, qps) in enumerate(self.points):
            if qps < 0:
                error_msg = f"第{index + 1}个点的QPS为负数"
                raise ValueError(error_msg)
            if index > 0 and t < self.points[index - 1][0]:
                error_msg = f"第{index + 1}个点的时刻未按升序排列"
                raise ValueError(error_msg)
        return self

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.points]

    @property
    def loads(self) -> list[float]:
        return [qps for _, qps in self.points]

    @property
    def peak(self) -> float:
        return max(self.loads, default=0.0)

    def load_at(self, t: float) -> float:
        """取时刻 t 之前最近一个点的负载（阶梯保持）"""
        value = 0.0
        for time, qps in self.points:
            if time > t:
                break
            value = qps
        return value
