import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from injector import inject

from src.core.loadgen import gen_diurnal_trace
from src.exception import ValidateErrorException
from src.schemas.experiment_schema import ExperimentConfig

from .base_service import BaseService
from .config_service import ConfigService
from .serve_service import ServeService
from .trace_service import TraceService

logger = logging.getLogger(__name__)

EVOLVE_FILE_NAME = "evolve.csv"
EVOLVE_SUMMARY_FILE_NAME = "evolve_summary.yaml"


@inject
@dataclass
class EvolveService(BaseService):
    """模型演进实验：负载逐日从旧模型迁移到新模型，比较不同集群的容量与功耗变化

    每个工作负载的峰值为 mix * total_peak_fraction * 参考集群对该模型的总画像吞吐，
    参考集群默认为 clusters 中的第一个，所有集群使用相同的负载
    """

    config_service: ConfigService
    serve_service: ServeService

    def evolve(self, experiment: ExperimentConfig, out_dir: Path) -> dict[str, Any]:
        self.config_service.catalog(experiment)
        evolution = experiment.evolution
        if evolution is None or not evolution.clusters:
            error_msg = f"场景{experiment.scenario}没有配置evolution.clusters"
            raise ValidateErrorException(error_msg, {"evolution": [error_msg]})
        table = self.config_service.load_table(experiment, out_dir)
        reference = next(iter(evolution.clusters.values()))
        models = evolution.old_models + evolution.new_models

        rows = [["day", "shift", "cluster", "peak_servers", "avg_servers", "peak_power_w", "avg_power_w", "violations"]]
        series: dict[str, list[dict[str, Any]]] = {name: [] for name in evolution.clusters}
        for day, shift in enumerate(evolution.shift):
            mix = evolution.mix(shift)
            traces = {}
            for index, model in enumerate(models):
                peak = mix[model] * evolution.total_peak_fraction * TraceService.cluster_capacity(
                    table, model, reference,
                )
                traces[model] = gen_diurnal_trace(
                    peak,
                    1,
                    evolution.trough_ratio,
                    interval_s=experiment.trace_interval_s,
                    seed=experiment.seed + index,
                    workload=model,
                )
            for name, availability in evolution.clusters.items():
                timeline = self.serve_service.run_policies(experiment, table, traces, availability, ["hercules"])[0]
                summary = timeline.summary()
                violations = summary.load_violations + summary.capacity_violations + summary.infeasible_intervals
                rows.append([
                    str(day), repr(shift), name, str(summary.peak_servers), repr(summary.avg_servers),
                    repr(summary.peak_power_w), repr(summary.avg_power_w), str(violations),
                ])
                series[name].append({
                    "day": day,
                    "shift": shift,
                    "peak_servers": summary.peak_servers,
                    "peak_power_w": summary.peak_power_w,
                    "avg_power_w": summary.avg_power_w,
                    "violations": violations,
                })
                logger.info("第%d天 f=%.2f %s: 峰值%d台/%.1fW", day, shift, name, summary.peak_servers, summary.peak_power_w)

        out_dir = Path(out_dir)
        csv_path = self.write_rows(out_dir / EVOLVE_FILE_NAME, rows)
        growth = {}
        for name, points in series.items():
            first, last = points[0], points[-1]
            growth[name] = {
                "peak_power_ratio": last["peak_power_w"] / first["peak_power_w"] if first["peak_power_w"] > 0 else 0.0,
                "avg_power_ratio": last["avg_power_w"] / first["avg_power_w"] if first["avg_power_w"] > 0 else 0.0,
            }
        summary = {"scenario": experiment.scenario, "clusters": series, "growth": growth}
        self.write_yaml(out_dir / EVOLVE_SUMMARY_FILE_NAME, summary)
        return {"file": str(csv_path), **summary}
