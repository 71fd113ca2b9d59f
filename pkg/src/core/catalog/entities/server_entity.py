from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

GB = 1e9

NMP_FACTORS = (1, 2, 4, 8)


class CpuSpec(BaseModel):
    """主机CPU参数"""

    model_config = ConfigDict(frozen=True)

    name: str = ""  # 例如 CPU-T2
    cores: int = Field(gt=0)  # 物理核心数（不使用超线程）
    freq_ghz: float = Field(gt=0)
    tdp_w: float = Field(gt=0)
    peak_flops_per_core: float = Field(default=32.0, gt=0)  # 每周期每核浮点运算数

    @property
    def core_flops(self) -> float:
        """单核峰值算力，单位FLOP/s"""
        return self.peak_flops_per_core * self.freq_ghz * 1e9


class MemorySpec(BaseModel):
    """主存参数，nmp_factor>1 表示近存计算DIMM"""

    model_config = ConfigDict(frozen=True)

    name: str = ""  # 例如 DDR4 / NMPx2
    channels: int = Field(gt=0)
    dimms_per_channel: int = Field(gt=0)
    ranks_per_dimm: int = Field(gt=0)
    capacity_gb: float = Field(gt=0)
    tdp_w: float = Field(gt=0)
    bandwidth_gbps: float = Field(gt=0)
    nmp_factor: int = 1
    nmp_static_w: float = Field(default=0.0, ge=0)  # 近存计算单元的静态功耗

    @field_validator("nmp_factor")
    @classmethod
    def validate_nmp_factor(cls, value: int) -> int:
        if value not in NMP_FACTORS:
            error_msg = f"nmp_factor必须属于{NMP_FACTORS}"
            raise ValueError(error_msg)
        return value

    @model_validator(mode="after")
    def validate_memory(self) -> Self:
        if self.nmp_factor == 1 and self.nmp_static_w > 0:
            error_msg = "普通DDR4内存不能配置nmp_static_w"
            raise ValueError(error_msg)
        return self

    @property
    def is_nmp(self) -> bool:
        return self.nmp_factor > 1


class AccelSpec(BaseModel):
    """加速器参数"""

    model_config = ConfigDict(frozen=True)

    name: str = ""  # 例如 V100
    sms: int = Field(gt=0)
    boost_mhz: float = Field(gt=0)
    hbm_gb: float = Field(gt=0)
    hbm_bw_gbps: float = Field(gt=0)
    pcie_gbps: float = Field(gt=0)
    tdp_w: float = Field(gt=0)
    peak_tflops: float = Field(gt=0)

    @property
    def hbm_bytes(self) -> float:
        return self.hbm_gb * GB


class ServerSpec(BaseModel):
    """异构服务器类型参数"""

    model_config = ConfigDict(frozen=True)

    name: str  # T1..T10
    availability: int = Field(ge=0)  # 集群中该类型的可用台数 N_h
    cpu: CpuSpec
    memory: MemorySpec
    accel: AccelSpec | None = None

    @property
    def has_accel(self) -> bool:
        return self.accel is not None

    @property
    def tdp_sum_w(self) -> float:
        """全部组件TDP之和（含近存计算静态功耗）"""
        total = self.cpu.tdp_w + self.memory.tdp_w + self.memory.nmp_static_w
        if self.accel is not None:
            total += self.accel.tdp_w
        return total

    @property
    def label(self) -> str:
        """可读的硬件组合，例如 CPU-T2+NMPx2+V100"""
        parts = [self.cpu.name, self.memory.name]
        if self.accel is not None:
            parts.append(self.accel.name)
        return "+".join(p for p in parts if p)

    def to_yaml_dict(self) -> dict:
        """导出为目录文件格式"""
        return self.model_dump(mode="json", exclude_none=True)
