import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from injector import inject

from src.core.loadgen import LoadTrace, format_trace, gen_diurnal_trace, ingest_trace
from src.core.schedsearch import EfficiencyTable
from src.exception import NotFoundException, ValidateErrorException
from src.schemas.experiment_schema import ExperimentConfig, WorkloadTraceSchema

from .base_service import BaseService

logger = logging.getLogger(__name__)


@inject
@dataclass
class TraceService(BaseService):
    """负载轨迹服务：按场景配置合成或读取各工作负载的轨迹"""

    @classmethod
    def cluster_capacity(cls, table: EfficiencyTable, model: str, availability: dict[str, int]) -> float:
        """集群全部可用服务器都服务该模型时的总画像吞吐"""
        return sum(count * table.qps(model, server) for server, count in availability.items())

    def workload_trace(
        self,
        workload: WorkloadTraceSchema,
        experiment: ExperimentConfig,
        table: EfficiencyTable | None,
        availability: dict[str, int],
        seed: int,
        days: int | None = None,
    ) -> LoadTrace:
        if workload.trace_file is not None:
            path = Path(workload.trace_file)
            if not path.is_file():
                error_msg = f"轨迹文件{path}不存在"
                raise NotFoundException(error_msg)
            return ingest_trace(path, workload=workload.model, interval_s=experiment.trace_interval_s)
        if workload.peak_qps is not None:
            peak = workload.peak_qps
        else:
            if table is None:
                error_msg = f"工作负载{workload.model}使用peak_fraction，需要效率表"
                raise ValidateErrorException(error_msg)
            peak = workload.peak_fraction * self.cluster_capacity(table, workload.model, availability)
        return gen_diurnal_trace(
            peak,
            days if days is not None else experiment.days,
            workload.trough_ratio,
            noise=workload.noise,
            interval_s=experiment.trace_interval_s,
            seed=seed,
            workload=workload.model,
            peak_time_s=workload.peak_time_s,
        )

    def build_traces(
        self,
        experiment: ExperimentConfig,
        table: EfficiencyTable | None,
        availability: dict[str, int] | None = None,
    ) -> dict[str, LoadTrace]:
        """场景中每个工作负载的轨迹，第 i 个工作负载使用种子 seed + i"""
        availability = experiment.availability if availability is None else availability
        if not experiment.workloads:
            error_msg = f"场景{experiment.scenario}没有配置工作负载"
            raise ValidateErrorException(error_msg, {"workloads": [error_msg]})
        traces = {}
        for index, workload in enumerate(experiment.workloads):
            if workload.model in traces:
                error_msg = f"工作负载{workload.model}重复配置"
                raise ValidateErrorException(error_msg, {"workloads": [error_msg]})
            traces[workload.model] = self.workload_trace(
                workload, experiment, table, availability, experiment.seed + index,
            )
        return traces

    def generate(
        self,
        experiment: ExperimentConfig,
        table: EfficiencyTable | None,
        availability: dict[str, int],
        out_dir: Path,
    ) -> dict[str, Any]:
        """导出场景的全部轨迹文件"""
        traces = self.build_traces(experiment, table, availability)
        files = {}
        for name, trace in traces.items():
            path = self.write_text(Path(out_dir) / "traces" / f"{_file_stem(name)}.csv", format_trace(trace))
            files[name] = {"file": str(path), "points": len(trace.points), "peak_qps": trace.peak}
        logger.info("导出%d条轨迹到%s", len(files), out_dir)
        return {"scenario": experiment.scenario, "traces": files}


def _file_stem(name: str) -> str:
    return name.lower().replace(" ", "_")
