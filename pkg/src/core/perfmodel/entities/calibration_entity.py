from pathlib import Path
from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.catalog import SizeClass
from src.core.catalog.catalog_manager import build_spec, load_yaml_with_lines
from src.core.loadgen import QuerySizeDistribution


class Calibration(BaseModel):
    """性能与功耗模型的全部标定常数

    默认值使算子空闲比例落在 25%~74%、DLRM-RMC3 加速器数据加载占比落在 65%~83%
    """

    model_config = ConfigDict(frozen=True)

    # 算子并行效率 eff(o)，超出表长后线性外推并以 efficiency_floor 为下限
    op_efficiency: list[float] = Field(default_factory=lambda: [1.0, 0.75, 0.55, 0.26])
    efficiency_floor: float = Field(default=0.2, gt=0, le=1)
    # 共置干扰 interf(m, o) = 1 / (1 + alpha * max(0, m*o/cores - beta))
    interference_alpha: float = Field(default=0.5, ge=0)
    interference_beta: float = Field(default=0.5, ge=0)
    # MPS 共置效率 mps_eff(m) = min(1, base + (1 - base) / m)
    mps_base: float = Field(default=0.7, ge=0, le=1)
    idle_frac: float = Field(default=0.3, ge=0, le=1)
    launch_overhead_s: float = Field(default=5e-6, ge=0)  # 加速器每算子启动开销
    host_dispatch_s: float = Field(default=2e-6, ge=0)  # 主机每算子调度开销
    host_gather_efficiency: float = Field(default=0.4, gt=0, le=1)  # 随机行读取相对峰值带宽
    memcpy_gbps: float = Field(default=20.0, gt=0)  # 稀疏线程到稠密线程的拷贝带宽
    pcie_efficiency: float = Field(default=0.12, gt=0, le=1)  # 主机到设备输入传输的实际效率
    fusion_timeout_fraction: float = Field(default=0.25, gt=0)  # 查询融合超时占SLA比例
    tail_percentile: float = Field(default=95.0, gt=0, lt=100)
    warmup_fraction: float = Field(default=0.1, ge=0, lt=1)
    operator_fusion: bool = False
    fusion_discount: float = Field(default=0.05, ge=0, lt=1)
    query_size: QuerySizeDistribution = Field(default_factory=QuerySizeDistribution)
    pooling_tail: float = Field(default=0.0, ge=0, le=1)
    zipf_s: float = Field(default=0.9, gt=0)
    bytes_per_element: int = Field(default=4, gt=0)
    index_bytes: int = Field(default=8, gt=0)
    size_class: SizeClass = SizeClass.PROD
    max_queue_subqueries: int = Field(default=10_000, gt=0)  # 每线程队列的准入上限
    intermediate_queue_capacity: int = Field(default=64, gt=0)  # 流水线中间队列容量
    power_window_s: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def validate_calibration(self) -> Self:
        if not self.op_efficiency or any(e <= 0 for e in self.op_efficiency):
            error_msg = "op_efficiency必须为非空的正数列表"
            raise ValueError(error_msg)
        return self

    def eff(self, o: int) -> float:
        """算子并行效率 eff(o)"""
        table = self.op_efficiency
        if o <= len(table):
            return table[o - 1]
        if len(table) == 1:
            return max(table[0], self.efficiency_floor)
        slope = table[-1] - table[-2]
        value = table[-1] + slope * (o - len(table))
        return max(value, self.efficiency_floor)

    def idle_fraction(self, o: int) -> float:
        """算子工作线程的空闲周期比例"""
        return 1.0 - self.eff(o)

    def interf(self, occupied_cores: float, cores: int) -> float:
        """共置干扰系数，occupied_cores 为 m*o"""
        pressure = max(0.0, occupied_cores / cores - self.interference_beta)
        return 1.0 / (1.0 + self.interference_alpha * pressure)

    def mps_eff(self, m: int) -> float:
        return min(1.0, self.mps_base + (1.0 - self.mps_base) / m)

    def fusion_timeout_s(self, sla_ms: float) -> float:
        return sla_ms / 1000.0 * self.fusion_timeout_fraction

    @classmethod
    def load(cls, path: Path | str) -> "Calibration":
        """从YAML文件读取标定常数，未给出的字段取默认值"""
        data = load_yaml_with_lines(Path(path)) or {}
        return build_spec(cls, data, Path(path).name)

    def override(self, values: dict | None) -> "Calibration":
        """按字段名覆盖部分常数"""
        if not values:
            return self
        merged = self.model_dump()
        merged.update(values)
        return Calibration(**merged)


DEFAULT_CALIBRATION = Calibration()
