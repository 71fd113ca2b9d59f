import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from injector import inject

from src.core.schedsearch import SearchTrace, profile_all
from src.schemas.experiment_schema import ExperimentConfig

from .base_service import BaseService
from .config_service import ConfigService

logger = logging.getLogger(__name__)

TRACE_FILE_NAME = "search_traces.yaml"


@inject
@dataclass
class ProfileService(BaseService):
    """离线画像服务，生成效率表与每个组合的搜索轨迹"""

    config_service: ConfigService

    def profile(self, experiment: ExperimentConfig, out_dir: Path) -> dict[str, Any]:
        catalog = self.config_service.catalog(experiment)
        models = self.config_service.models(experiment, catalog)
        servers = self.config_service.servers(experiment, catalog)
        logger.info("开始画像: %d个模型 x %d个服务器", len(models), len(servers))

        traces: dict[tuple[str, str], list[SearchTrace]] = {}
        table = profile_all(
            models,
            servers,
            sla_ms=experiment.sla_ms,
            evaluator_kind=experiment.evaluator,
            seed=experiment.seed,
            calibration=experiment.calibration,
            power_budget_w=experiment.power_budget_w,
            batches=experiment.batches,
            jobs=experiment.jobs,
            traces=traces,
        )

        table_path = self.config_service.table_path(experiment, out_dir)
        self.write_text(table_path, table.to_yaml())
        trace_path = self.write_yaml(Path(out_dir) / TRACE_FILE_NAME, self._trace_log(traces))
        return {
            "table": str(table_path),
            "traces": str(trace_path),
            "entries": len(table.entries),
            "failures": [f"{e.model}@{e.server}: {e.failure}" for e in table.failures],
            "violations": [f"{e.model}@{e.server}" for e in table.entries if e.violation and e.failure is None],
        }

    @classmethod
    def _trace_log(cls, traces: dict[tuple[str, str], list[SearchTrace]]) -> list[dict[str, Any]]:
        """按组合输出每条搜索轨迹，用于绘制搜索路径"""
        log = []
        for (model, server), pair_traces in traces.items():
            log.append({
                "model": model,
                "server": server,
                "searches": [trace.model_dump(mode="json") for trace in pair_traces],
            })
        return log
