from collections.abc import Callable
from pathlib import Path

import pytest
from click.testing import CliRunner

from src.core.catalog import CatalogManager
from src.core.perfmodel import Calibration, HostConfig, SchedConfig, SchedulingStrategy, StrategyKind
from src.core.schedsearch import EfficiencyTable, EfficiencyTuple

# 手工构造的效率表：RMC1 在近内存处理服务器上最好，RMC2 在GPU服务器上最好
SEC33_QPS = {
    ("DLRM-RMC1", "T2"): (100.0, 200.0),
    ("DLRM-RMC1", "T3"): (250.0, 230.0),
    ("DLRM-RMC1", "T7"): (150.0, 450.0),
    ("DLRM-RMC2", "T2"): (40.0, 200.0),
    ("DLRM-RMC2", "T3"): (60.0, 230.0),
    ("DLRM-RMC2", "T7"): (300.0, 480.0),
}
SEC33_AVAILABILITY = {"T2": 70, "T3": 15, "T7": 5}


@pytest.fixture(autouse=True)
def hercules_env(tmp_path, monkeypatch) -> Path:
    """把输出与日志目录指向临时目录，避免测试写入工作区"""
    monkeypatch.setenv("HERCULES_OUT_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("HERCULES_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("HERCULES_LOG_CONSOLE", "False")
    return tmp_path


@pytest.fixture(scope="session")
def catalog() -> CatalogManager:
    """内置模型与服务器目录"""
    return CatalogManager()


@pytest.fixture(scope="session")
def calibration() -> Calibration:
    return Calibration()


@pytest.fixture(scope="session")
def make_entry() -> Callable[[str, str, float, float], EfficiencyTuple]:
    """构造一条带占位配置的效率元组"""

    def factory(model: str, server: str, qps: float, power_w: float) -> EfficiencyTuple:
        strategy = SchedulingStrategy(kind=StrategyKind.MODEL_BASED)
        cfg = SchedConfig(strategy=strategy, host=HostConfig(m=1, o=1, d=16))
        return EfficiencyTuple(model=model, server=server, qps=qps, power_w=power_w, strategy=strategy, cfg=cfg)

    return factory


@pytest.fixture
def sec33_table(make_entry) -> EfficiencyTable:
    return EfficiencyTable(entries=[make_entry(m, s, q, p) for (m, s), (q, p) in SEC33_QPS.items()])


@pytest.fixture
def sec33_availability() -> dict[str, int]:
    return dict(SEC33_AVAILABILITY)


@pytest.fixture
def out_dir(tmp_path) -> Path:
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture
def runner() -> CliRunner:
    """命令行测试客户端"""
    return CliRunner()
