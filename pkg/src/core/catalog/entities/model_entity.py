from enum import Enum
from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SizeClass(str, Enum):
    """嵌入表规模类别"""

    PROD = "prod"
    SMALL = "small"


class AttentionKind(str, Enum):
    """注意力单元类型"""

    NONE = "none"
    FC = "fc"
    GRU = "gru"


class IntRange(BaseModel):
    """闭区间整数范围，low <= high"""

    model_config = ConfigDict(frozen=True)

    low: int = Field(gt=0)
    high: int = Field(gt=0)

    @model_validator(mode="after")
    def validate_range(self) -> Self:
        if self.low > self.high:
            error_msg = f"范围下界{self.low}大于上界{self.high}"
            raise ValueError(error_msg)
        return self

    @classmethod
    def parse(cls, value: object) -> object:
        """支持 "1M - 5M"、"20-160"、单个数字以及 [low, high] 列表等写法"""
        if isinstance(value, bool):
            return value
        if isinstance(value, int | float):
            return {"low": int(value), "high": int(value)}
        if isinstance(value, list | tuple) and len(value) == 2:  # noqa: PLR2004
            return {"low": _parse_count(value[0]), "high": _parse_count(value[1])}
        if isinstance(value, str):
            parts = [p for p in value.replace(" ", "").split("-") if p]
            if len(parts) == 1:
                count = _parse_count(parts[0])
                return {"low": count, "high": count}
            if len(parts) == 2:  # noqa: PLR2004
                return {"low": _parse_count(parts[0]), "high": _parse_count(parts[1])}
        return value

    @property
    def midpoint(self) -> float:
        """范围中点，用于静态规模与算力估算"""
        return (self.low + self.high) / 2

    def to_yaml_value(self) -> list[int]:
        return [self.low, self.high]


_SUFFIX = {"K": 1_000, "M": 1_000_000, "G": 1_000_000_000}


def _parse_count(token: object) -> int:
    """解析带K/M/G后缀的计数，例如 0.1M -> 100000"""
    if isinstance(token, int | float):
        return int(token)
    text = str(token).strip().upper()
    scale = 1
    if text and text[-1] in _SUFFIX:
        scale = _SUFFIX[text[-1]]
        text = text[:-1]
    return round(float(text) * scale)


class ModelSpec(BaseModel):
    """推荐模型结构参数"""

    model_config = ConfigDict(frozen=True)

    name: str  # 模型名字，例如 DLRM-RMC1
    service: str = ""  # 所属业务
    num_emb_tables: int = Field(ge=0)  # 嵌入表数量
    emb_rows_prod: IntRange  # 生产规模每表行数
    emb_rows_small: IntRange  # 小规模每表行数
    emb_dim: int = Field(default=32, gt=0)  # 每行元素个数
    lookups_per_table: IntRange  # 每个样本每表的稀疏索引数
    sequence_lookups: IntRange | None = None  # 行为序列表的长度（最后一张表）
    has_pooling: bool = True  # Gather-Reduce 或 one-hot
    attention_kind: AttentionKind = AttentionKind.NONE
    attention_fc: list[int] = Field(default_factory=list)  # 注意力单元的全连接宽度
    dense_input_dim: int = Field(default=0, ge=0)  # 底部全连接的稠密特征输入
    bottom_fc: list[int] = Field(default_factory=list)
    predict_fc: list[int] = Field(default_factory=list)
    predict_fc_replicas: int = Field(default=1, gt=0)
    sla_ms: float = Field(gt=0)

    @field_validator(
        "emb_rows_prod",
        "emb_rows_small",
        "lookups_per_table",
        "sequence_lookups",
        mode="before",
    )
    @classmethod
    def parse_ranges(cls, value: object) -> object:
        """将目录文件中的范围写法转换为IntRange"""
        return IntRange.parse(value)

    @field_validator("bottom_fc", "predict_fc", "attention_fc")
    @classmethod
    def validate_widths(cls, value: list[int]) -> list[int]:
        if any(width <= 0 for width in value):
            error_msg = "全连接层宽度必须为正数"
            raise ValueError(error_msg)
        return value

    @model_validator(mode="after")
    def validate_model(self) -> Self:
        if not self.has_pooling and self.lookups_per_table.high != 1:
            error_msg = "one-hot模型每表的查找次数必须为1"
            raise ValueError(error_msg)
        if self.bottom_fc and self.dense_input_dim == 0:
            error_msg = "存在底部全连接时dense_input_dim必须大于0"
            raise ValueError(error_msg)
        if self.attention_kind != AttentionKind.NONE:
            if self.sequence_lookups is None or self.num_emb_tables == 0:
                error_msg = "注意力模型必须配置sequence_lookups"
                raise ValueError(error_msg)
            if not self.attention_fc:
                error_msg = "注意力模型必须配置attention_fc"
                raise ValueError(error_msg)
        return self

    def rows(self, size_class: SizeClass) -> float:
        """按规模类别取每表行数（区间中点）"""
        if size_class == SizeClass.SMALL:
            return self.emb_rows_small.midpoint
        return self.emb_rows_prod.midpoint

    def table_lookups(self) -> list[float]:
        """每张表每个样本的平均访问行数，行为序列表取序列长度中点"""
        lookups = [self.lookups_per_table.midpoint] * self.num_emb_tables
        if self.sequence_lookups is not None and lookups:
            lookups[-1] = self.sequence_lookups.midpoint
        return lookups

    def table_lookup_ranges(self) -> list[IntRange]:
        """每张表的访问次数范围"""
        ranges = [self.lookups_per_table] * self.num_emb_tables
        if self.sequence_lookups is not None and ranges:
            ranges[-1] = self.sequence_lookups
        return ranges

    def to_yaml_dict(self) -> dict:
        """导出为目录文件格式"""
        data = self.model_dump(mode="json")
        for key in ("emb_rows_prod", "emb_rows_small", "lookups_per_table"):
            data[key] = getattr(self, key).to_yaml_value()
        if self.sequence_lookups is not None:
            data["sequence_lookups"] = self.sequence_lookups.to_yaml_value()
        return data
