import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml
from injector import inject
from pydantic import ValidationError

from config import Config
from src.core.catalog import CatalogManager, ModelSpec, ServerSpec
from src.core.schedsearch import EfficiencyTable
from src.exception import NotFoundException, ValidateErrorException
from src.schemas.experiment_schema import ExperimentConfig, load_experiment, resolve_config_path

from .base_service import BaseService

logger = logging.getLogger(__name__)

TABLE_FILE_NAME = "efficiency_table.yaml"


@inject
@dataclass
class ConfigService(BaseService):
    """实验配置服务：解析场景文件、合并目录覆盖、定位效率表"""

    conf: Config
    catalog_manager: CatalogManager

    def defaults(self) -> dict[str, Any]:
        """环境配置提供的默认值"""
        return {"seed": self.conf.DEFAULT_SEED, "jobs": self.conf.JOBS}

    def load(self, config: str | None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
        """读取场景配置，未指定时仅使用命令行参数与默认值"""
        if config is None:
            data = {**self.defaults(), **{k: v for k, v in (overrides or {}).items() if v is not None}}
            try:
                return ExperimentConfig(**data)
            except ValidationError as e:
                first = e.errors()[0]
                field = ".".join(str(loc) for loc in first["loc"])
                error_msg = f"参数{field}校验失败: {first['msg']}"
                raise ValidateErrorException(error_msg, {field: [first["msg"]]}) from e
        path = resolve_config_path(config, self.conf.CONFIG_DIR)
        experiment = load_experiment(path, overrides, self.defaults())
        logger.info("读取场景配置%s", path)
        return experiment

    def catalog(self, experiment: ExperimentConfig) -> CatalogManager:
        """返回场景使用的目录，并校验场景引用的条目"""
        catalog = self.catalog_manager
        if experiment.catalog is not None:
            path = Path(experiment.catalog)
            if not path.is_file():
                error_msg = f"目录文件{path}不存在"
                raise NotFoundException(error_msg)
            catalog = catalog.load_override(path)
        experiment.check_references(catalog)
        return catalog

    def models(self, experiment: ExperimentConfig, catalog: CatalogManager) -> list[ModelSpec]:
        return catalog.get_models(experiment.models)

    def servers(self, experiment: ExperimentConfig, catalog: CatalogManager) -> list[ServerSpec]:
        return catalog.get_servers(experiment.servers)

    def table_path(self, experiment: ExperimentConfig, out_dir: Path) -> Path:
        return Path(experiment.table) if experiment.table else Path(out_dir) / TABLE_FILE_NAME

    def load_table(self, experiment: ExperimentConfig, out_dir: Path) -> EfficiencyTable:
        """读取效率表，文件不存在时提示先运行 profile"""
        path = self.table_path(experiment, out_dir)
        if not path.is_file():
            error_msg = f"效率表{path}不存在，请先运行 hercules profile 生成"
            raise NotFoundException(error_msg, {"table": str(path)})
        try:
            return EfficiencyTable.load(path)
        except (yaml.YAMLError, ValidationError) as e:
            error_msg = f"效率表{path}格式错误: {e}"
            raise ValidateErrorException(error_msg, {"table": str(path)}) from e

    def validate(self, config: str | None, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
        """校验场景配置，返回摘要"""
        return self.summarize(self.load(config, overrides))

    def summarize(self, experiment: ExperimentConfig) -> dict[str, Any]:
        catalog = self.catalog(experiment)
        return {
            "scenario": experiment.scenario,
            "models": [m.name for m in self.models(experiment, catalog)],
            "servers": [s.name for s in self.servers(experiment, catalog)],
            "policies": list(experiment.policies),
            "workloads": [w.model for w in experiment.workloads],
            "evolution_days": len(experiment.evolution.shift) if experiment.evolution else 0,
        }

    def availability(self, experiment: ExperimentConfig, catalog: CatalogManager) -> dict[str, int]:
        """未配置可用台数时使用目录中各服务器类型的默认台数"""
        if experiment.availability:
            return dict(experiment.availability)
        return {s.name: s.availability for s in self.servers(experiment, catalog)}
