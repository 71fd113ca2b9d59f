from typing_extensions import Self

from pydantic import BaseModel, Field, model_validator

from src.core.perfmodel import StageLatency, Utilization


class SimReport(BaseModel):
    """一次服务器仿真的统计结果"""

    offered_qps: float = Field(ge=0)
    achieved_qps: float = Field(ge=0)
    tail_latency_s: float = Field(ge=0)
    mean_latency_s: float = Field(ge=0)
    latency_breakdown: StageLatency = Field(default_factory=StageLatency)
    utilization: Utilization = Field(default_factory=Utilization)
    avg_power_w: float = Field(ge=0)
    peak_power_w: float = Field(ge=0)
    arrivals: int = Field(ge=0)
    completed: int = Field(ge=0)
    dropped: int = Field(ge=0)
    in_flight: int = Field(ge=0)
    measured: int = Field(default=0, ge=0)  # 预热期之后完成并计入统计的查询数
    query_latencies: list[float] = Field(default_factory=list, exclude=True)

    @model_validator(mode="after")
    def validate_report(self) -> Self:
        if self.completed + self.dropped + self.in_flight != self.arrivals:
            error_msg = "查询守恒不成立：完成+丢弃+在途必须等于到达数"
            raise ValueError(error_msg)
        if self.tail_latency_s + 1e-12 < self.mean_latency_s:
            error_msg = "尾延迟不能小于平均延迟"
            raise ValueError(error_msg)
        if self.peak_power_w + 1e-9 < self.avg_power_w:
            error_msg = "峰值功耗不能小于平均功耗"
            raise ValueError(error_msg)
        return self


class AnalyticResult(BaseModel):
    """闭式模型在给定负载下的结果"""

    offered_qps: float
    tail_latency_s: float  # 饱和时为 inf
    qps: float
    power_w: float
    rho: float
    saturated: bool


class LatencyBoundResult(BaseModel):
    """满足SLA与功耗预算的最大吞吐"""

    qps: float = Field(ge=0)
    peak_power_w: float = Field(ge=0)
    tail_latency_s: float = 0.0
    violation: bool = False  # 最小负载也无法满足约束
    evaluations: int = 0  # 二分过程中的仿真次数


class CrossValidation(BaseModel):
    """闭式饱和吞吐与仿真饱和吞吐的对比"""

    analytic_qps: float
    simulated_qps: float

    @property
    def relative_error(self) -> float:
        if self.analytic_qps <= 0:
            return 0.0 if self.simulated_qps <= 0 else float("inf")
        return abs(self.simulated_qps - self.analytic_qps) / self.analytic_qps
