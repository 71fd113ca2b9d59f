from pathlib import Path
from typing import Any
from typing_extensions import Self

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.core.catalog import CatalogManager
from src.core.catalog.catalog_manager import load_yaml_with_lines, strip_lines
from src.core.perfmodel import Calibration
from src.core.provisioner import Policy, RankBy, RMode
from src.core.schedsearch import EvaluatorKind
from src.exception import ValidateErrorException

POLICIES: tuple[str, ...] = ("nh", "greedy", "priority", "hercules")


class WorkloadTraceSchema(BaseModel):
    """一个工作负载的负载来源：轨迹文件，或者日周期合成参数"""

    model: str
    trace_file: str | None = None
    peak_qps: float | None = Field(default=None, ge=0)
    # 相对于集群对该模型的总画像容量的峰值比例
    peak_fraction: float | None = Field(default=None, ge=0)
    trough_ratio: float = Field(default=0.4, gt=0, lt=1)
    noise: float = Field(default=0.0, ge=0, lt=1)
    peak_time_s: float = 0.0

    @model_validator(mode="after")
    def validate_source(self) -> Self:
        sources = [self.trace_file is not None, self.peak_qps is not None, self.peak_fraction is not None]
        if sum(sources) != 1:
            error_msg = f"工作负载{self.model}必须且只能指定trace_file、peak_qps、peak_fraction之一"
            raise ValueError(error_msg)
        return self


class EvolutionSchema(BaseModel):
    """模型演进计划：每天一个迁移比例 f，旧模型各得 (1-f)/n，新模型各得 f/n"""

    old_models: list[str] = Field(default_factory=lambda: ["DLRM-RMC1", "DLRM-RMC2", "DLRM-RMC3"])
    new_models: list[str] = Field(default_factory=lambda: ["DIN", "DIEN", "MT-WnD"])
    shift: list[float] = Field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    total_peak_fraction: float = Field(default=0.5, gt=0)
    trough_ratio: float = Field(default=0.4, gt=0, lt=1)
    clusters: dict[str, dict[str, int]] = Field(default_factory=dict)  # 集群名 -> 各服务器类型可用台数

    @field_validator("shift")
    @classmethod
    def validate_shift(cls, shift: list[float]) -> list[float]:
        if not shift or any(not 0.0 <= f <= 1.0 for f in shift):
            error_msg = "shift必须是取值在[0, 1]内的非空列表"
            raise ValueError(error_msg)
        return shift

    @model_validator(mode="after")
    def validate_models(self) -> Self:
        if not self.old_models or not self.new_models:
            error_msg = "旧模型与新模型列表都不能为空"
            raise ValueError(error_msg)
        if set(self.old_models) & set(self.new_models):
            error_msg = "旧模型与新模型不能重叠"
            raise ValueError(error_msg)
        return self

    def mix(self, f: float) -> dict[str, float]:
        """某一天的负载构成，各比例之和为1"""
        mix = {name: (1.0 - f) / len(self.old_models) for name in self.old_models}
        mix.update({name: f / len(self.new_models) for name in self.new_models})
        return mix


class ExperimentConfig(BaseModel):
    """单个实验场景的配置"""

    scenario: str = "default"
    catalog: str | None = None  # 用户目录文件，同名条目覆盖内置条目
    calibration: Calibration = Field(default_factory=Calibration)
    seed: int = 42
    jobs: int = Field(default=1, ge=1)
    evaluator: EvaluatorKind = "analytic"

    # 离线画像
    models: list[str] = Field(default_factory=list)  # 为空时取全部内置模型
    servers: list[str] = Field(default_factory=list)  # 为空时取全部内置服务器
    sla_ms: dict[str, float] = Field(default_factory=dict)
    power_budget_w: float | None = Field(default=None, gt=0)
    batches: list[int] | None = None
    table: str | None = None  # 效率表路径，为空时使用输出目录下的 efficiency_table.yaml

    # 在线供给
    policies: list[Policy] = Field(default_factory=lambda: list(POLICIES))
    availability: dict[str, int] = Field(default_factory=dict)
    workloads: list[WorkloadTraceSchema] = Field(default_factory=list)
    days: int = Field(default=7, ge=1)
    trace_interval_s: float = Field(default=1800.0, gt=0)
    interval_s: float = Field(default=1800.0, gt=0)
    setup_delay_s: float = Field(default=30.0, ge=0)
    r_mode: RMode = "fixed"
    r_pct: float = Field(default=0.0, ge=0)
    rank_by: RankBy = "qps"  # greedy / priority 的服务器排序：qps 或 qps_per_watt

    evolution: EvolutionSchema | None = None

    @field_validator("sla_ms")
    @classmethod
    def validate_sla(cls, sla_ms: dict[str, float]) -> dict[str, float]:
        for name, value in sla_ms.items():
            if value <= 0:
                error_msg = f"模型{name}的SLA必须为正数"
                raise ValueError(error_msg)
        return sla_ms

    @field_validator("availability")
    @classmethod
    def validate_availability(cls, availability: dict[str, int]) -> dict[str, int]:
        for name, count in availability.items():
            if count < 0:
                error_msg = f"服务器类型{name}的可用台数不能为负数"
                raise ValueError(error_msg)
        return availability

    @field_validator("policies")
    @classmethod
    def validate_policies(cls, policies: list[str]) -> list[str]:
        if not policies or len(set(policies)) != len(policies):
            error_msg = "policies必须是无重复的非空列表"
            raise ValueError(error_msg)
        # 按固定顺序输出，保证结果文件可复现
        return [p for p in POLICIES if p in policies]

    def check_references(self, catalog: CatalogManager) -> None:
        """校验配置中引用的模型与服务器都在目录中"""
        models = set(self.models) | set(self.sla_ms) | {w.model for w in self.workloads}
        servers = set(self.servers) | set(self.availability)
        if self.evolution is not None:
            models |= set(self.evolution.old_models) | set(self.evolution.new_models)
            for cluster in self.evolution.clusters.values():
                servers |= set(cluster)
        errors = {}
        missing_models = sorted(m for m in models if m not in catalog.model_map)
        missing_servers = sorted(s for s in servers if s not in catalog.server_map)
        if missing_models:
            errors["models"] = [f"模型{name}不存在" for name in missing_models]
        if missing_servers:
            errors["servers"] = [f"服务器类型{name}不存在" for name in missing_servers]
        if errors:
            error_msg = f"场景{self.scenario}引用了目录中不存在的条目"
            raise ValidateErrorException(error_msg, errors)


def resolve_config_path(config: str, config_dir: Path) -> Path:
    """--config 既可以是文件路径，也可以是场景目录下的场景名"""
    path = Path(config)
    if path.suffix in (".yaml", ".yml") and path.exists():
        return path
    for candidate in (config_dir / config, config_dir / f"{config}.yaml", config_dir / f"{config}.yml"):
        if candidate.is_file():
            return candidate
    error_msg = f"场景配置{config}不存在"
    raise ValidateErrorException(error_msg, {"config": [error_msg]})


def load_experiment(
    path: Path,
    overrides: dict[str, Any] | None = None,
    defaults: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """读取实验配置文件，优先级：命令行参数 > 文件 > 环境默认值"""
    data = load_yaml_with_lines(path) or {}
    if not isinstance(data, dict):
        error_msg = f"{path.name}顶层必须是映射"
        raise ValidateErrorException(error_msg, {"file": str(path), "line": 1})
    lines = _field_lines(data)
    data = {**(defaults or {}), **strip_lines(data)}
    data.setdefault("scenario", path.stem)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(loc) for loc in first["loc"]) or "<root>"
        line = lines.get(str(first["loc"][0]) if first["loc"] else "", 0)
        error_msg = f"{path.name}第{line}行字段{field}校验失败: {first['msg']}"
        raise ValidateErrorException(error_msg, {"file": str(path), "line": line, "field": field}) from e


def _field_lines(data: dict) -> dict[str, int]:
    """顶层字段对应的行号，嵌套映射取其起始行"""
    lines = {}
    for key, value in data.items():
        if isinstance(value, dict) and "__line__" in value:
            lines[key] = value["__line__"]
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines[key] = value[0].get("__line__", 0)
        else:
            lines[key] = data.get("__line__", 0)
    return lines

