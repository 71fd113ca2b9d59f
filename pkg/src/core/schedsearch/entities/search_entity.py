from pathlib import Path
from typing_extensions import Self

import yaml
from pydantic import BaseModel, Field, model_validator

from src.core.perfmodel import SchedConfig, SchedulingStrategy


class Evaluation(BaseModel):
    """并行空间中一个点的评估结果"""

    cfg: SchedConfig
    qps: float = Field(ge=0)  # 满足延迟与功耗约束的吞吐，无效点为0
    power_w: float = Field(ge=0)
    tail_latency_s: float = Field(ge=0)  # 空载尾延迟
    valid: bool

    def sort_key(self) -> tuple:
        """越小越好：吞吐高、功耗低、线程少、批小"""
        group = self.cfg.search_group
        accel = (self.cfg.accel.m, self.cfg.accel.d) if self.cfg.accel is not None else (0, 0)
        return (-self.qps, self.power_w, group.m, group.d, group.o, *accel)


class TraceStep(BaseModel):
    """搜索轨迹中的一步"""

    o: int
    m: int
    d: int
    accel_m: int = 0
    accel_d: int = 0
    qps: float
    valid: bool


class SearchTrace(BaseModel):
    """一次梯度搜索的轨迹"""

    strategy: str = ""
    steps: list[TraceStep] = Field(default_factory=list)
    per_o_peaks: list[float] = Field(default_factory=list)  # 外层循环每个 o 的峰值
    evaluations: int = 0

    def record(self, evaluation: Evaluation) -> None:
        group = evaluation.cfg.search_group
        accel = evaluation.cfg.accel
        self.steps.append(
            TraceStep(
                o=group.o,
                m=group.m,
                d=group.d,
                accel_m=accel.m if accel is not None else 0,
                accel_d=accel.d if accel is not None else 0,
                qps=evaluation.qps,
                valid=evaluation.valid,
            ),
        )


class EfficiencyTuple(BaseModel):
    """(模型, 服务器) 的最佳效率元组"""

    model: str
    server: str
    qps: float = Field(default=0.0, ge=0)
    power_w: float = Field(default=0.0, ge=0)
    strategy: SchedulingStrategy | None = None
    cfg: SchedConfig | None = None
    violation: bool = False  # 没有满足SLA与功耗的配置
    failure: str | None = None  # 该组合评估失败的原因

    @model_validator(mode="after")
    def validate_tuple(self) -> Self:
        if self.qps > 0 and (self.cfg is None or self.strategy is None):
            error_msg = "有效的效率元组必须包含策略与配置"
            raise ValueError(error_msg)
        return self

    @property
    def usable(self) -> bool:
        return self.qps > 0 and not self.violation and self.failure is None

    @property
    def qps_per_watt(self) -> float:
        return self.qps / self.power_w if self.power_w > 0 else 0.0


class EfficiencyTable(BaseModel):
    """离线画像得到的工作负载分类表，每个 (模型, 服务器) 一条记录"""

    entries: list[EfficiencyTuple] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_entries(self) -> Self:
        keys = [(e.model, e.server) for e in self.entries]
        if len(keys) != len(set(keys)):
            error_msg = "效率表中存在重复的 (模型, 服务器) 记录"
            raise ValueError(error_msg)
        return self

    def get(self, model: str, server: str) -> EfficiencyTuple | None:
        return next((e for e in self.entries if e.model == model and e.server == server), None)

    def put(self, entry: EfficiencyTuple) -> None:
        """插入或替换一条记录"""
        self.entries = [e for e in self.entries if (e.model, e.server) != (entry.model, entry.server)]
        self.entries.append(entry)

    @property
    def models(self) -> list[str]:
        return list(dict.fromkeys(e.model for e in self.entries))

    @property
    def servers(self) -> list[str]:
        return list(dict.fromkeys(e.server for e in self.entries))

    @property
    def failures(self) -> list[EfficiencyTuple]:
        return [e for e in self.entries if e.failure is not None]

    def qps(self, model: str, server: str) -> float:
        entry = self.get(model, server)
        return entry.qps if entry is not None and entry.usable else 0.0

    def power(self, model: str, server: str) -> float:
        entry = self.get(model, server)
        return entry.power_w if entry is not None and entry.usable else 0.0

    def to_yaml(self) -> str:
        data = {"entries": [e.model_dump(mode="json") for e in self.entries]}
        return yaml.safe_dump(data, allow_unicode=True, sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "EfficiencyTable":
        data = yaml.safe_load(text) or {}
        return cls.model_validate(data)

    @classmethod
    def load(cls, path: Path | str) -> "EfficiencyTable":
        return cls.from_yaml(Path(path).read_text(encoding="utf-8"))
