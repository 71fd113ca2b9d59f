import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from injector import inject

from src.core.loadgen import LoadTrace
from src.core.provisioner import ProvisionTimeline, run_cluster_sim, savings
from src.core.schedsearch import EfficiencyTable
from src.schemas.experiment_schema import ExperimentConfig

from .base_service import BaseService
from .config_service import ConfigService
from .trace_service import TraceService

logger = logging.getLogger(__name__)

SUMMARY_FILE_NAME = "serve_summary.yaml"


@inject
@dataclass
class ServeService(BaseService):
    """在线供给服务：对每个策略运行集群仿真并输出时间线与对比摘要"""

    config_service: ConfigService
    trace_service: TraceService

    def run_policies(
        self,
        experiment: ExperimentConfig,
        table: EfficiencyTable,
        traces: dict[str, LoadTrace],
        availability: dict[str, int],
        policies: list[str] | None = None,
    ) -> list[ProvisionTimeline]:
        """并行运行各策略，结果顺序与策略列表一致"""
        policies = policies or list(experiment.policies)

        def run(policy: str) -> ProvisionTimeline:
            return run_cluster_sim(
                traces,
                table,
                availability,
                policy=policy,
                interval_s=experiment.interval_s,
                setup_delay_s=experiment.setup_delay_s,
                r_mode=experiment.r_mode,
                r_pct=experiment.r_pct,
                seed=experiment.seed,
                rank_by=experiment.rank_by,
            )

        with ThreadPoolExecutor(max_workers=experiment.jobs) as executor:
            return list(executor.map(run, policies))

    def serve(self, experiment: ExperimentConfig, out_dir: Path) -> dict[str, Any]:
        catalog = self.config_service.catalog(experiment)
        table = self.config_service.load_table(experiment, out_dir)
        availability = self.config_service.availability(experiment, catalog)
        traces = self.trace_service.build_traces(experiment, table, availability)
        timelines = self.run_policies(experiment, table, traces, availability)

        out_dir = Path(out_dir)
        files = []
        for timeline in timelines:
            files.append(str(self.write_rows(out_dir / f"timeline_{timeline.policy}.csv", timeline.to_rows())))
        summaries = [timeline.summary() for timeline in timelines]
        summary = {
            "scenario": experiment.scenario,
            "policies": [s.model_dump(mode="json") for s in summaries],
            "savings_vs_greedy": savings(summaries, "greedy"),
            "savings_vs_nh": savings(summaries, "nh"),
        }
        self.write_yaml(out_dir / SUMMARY_FILE_NAME, summary)
        for policy, values in summary["savings_vs_greedy"].items():
            logger.info("%s相对greedy节省: 峰值%.1f%%，平均%.1f%%", policy, values["peak_pct"], values["avg_pct"])
        return {"timelines": files, **summary}
