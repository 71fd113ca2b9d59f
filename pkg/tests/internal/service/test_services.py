from pathlib import Path

import numpy as np
import pytest
import yaml

from app.cli.module import create_injector
from src.core.provisioner import ProvisionTimeline, build_lp
from src.core.schedsearch import EfficiencyTable
from src.exception import NotFoundException, ValidateErrorException
from src.service.config_service import TABLE_FILE_NAME, ConfigService
from src.service.evolve_service import EVOLVE_FILE_NAME, EvolveService
from src.service.serve_service import SUMMARY_FILE_NAME, ServeService
from src.service.trace_service import TraceService

# 集群全部用于 RMC1 时的总吞吐：70*100 + 15*250 + 5*150
RMC1_CAPACITY = 11500.0


@pytest.fixture
def injector():
    return create_injector()


@pytest.fixture
def config_service(injector) -> ConfigService:
    return injector.get(ConfigService)


@pytest.fixture
def written_table(sec33_table, out_dir) -> Path:
    path = out_dir / TABLE_FILE_NAME
    path.write_text(sec33_table.to_yaml(), encoding="utf-8")
    return path


class TestConfigService:
    def test_builtin_scenario(self, config_service) -> None:
        summary = config_service.validate("sec33")
        assert summary["scenario"] == "sec33"
        assert summary["models"] == ["DLRM-RMC1", "DLRM-RMC2"]
        assert summary["servers"] == ["T2", "T3", "T7"]
        assert summary["policies"] == ["nh", "greedy", "priority", "hercules"]

    def test_overrides_win(self, config_service) -> None:
        experiment = config_service.load("sec33", {"seed": 7, "policies": ["hercules", "greedy"], "days": 1})
        assert experiment.seed == 7
        assert experiment.days == 1
        assert experiment.policies == ["greedy", "hercules"]

    def test_rank_by_override(self, config_service) -> None:
        assert config_service.load("sec33").rank_by == "qps"
        assert config_service.load("sec33", {"rank_by": "qps_per_watt"}).rank_by == "qps_per_watt"
        with pytest.raises(ValidateErrorException):
            config_service.load("sec33", {"rank_by": "power"})

    def test_defaults_without_file(self, config_service) -> None:
        experiment = config_service.load(None)
        assert experiment.seed == 42
        assert experiment.jobs == 1

    def test_unknown_scenario(self, config_service) -> None:
        with pytest.raises(ValidateErrorException):
            config_service.load("no-such-scenario")

    def test_field_error_reports_line(self, config_service, tmp_path) -> None:
        path = tmp_path / "bad.yaml"
        path.write_text("scenario: bad\nseed: 1\ndays: 0\n", encoding="utf-8")
        with pytest.raises(ValidateErrorException) as exc:
            config_service.load(str(path))
        assert exc.value.data["field"] == "days"

    def test_unknown_catalog_entries(self, config_service) -> None:
        experiment = config_service.load(None, {"models": ["RMC9"], "servers": ["T2"]})
        with pytest.raises(ValidateErrorException) as exc:
            config_service.catalog(experiment)
        assert "models" in exc.value.data

    def test_missing_table(self, config_service, out_dir) -> None:
        experiment = config_service.load("sec33")
        with pytest.raises(NotFoundException, match="hercules profile"):
            config_service.load_table(experiment, out_dir)

    def test_corrupt_table(self, config_service, out_dir) -> None:
        (out_dir / TABLE_FILE_NAME).write_text("entries: [\n", encoding="utf-8")
        with pytest.raises(ValidateErrorException):
            config_service.load_table(config_service.load("sec33"), out_dir)

    def test_availability_falls_back_to_catalog(self, config_service, catalog) -> None:
        experiment = config_service.load(None, {"servers": ["T1", "T7"]})
        assert config_service.availability(experiment, catalog) == {"T1": 100, "T7": 5}


class TestTraceService:
    def test_peak_fraction_uses_cluster_capacity(self, injector, config_service, written_table, out_dir) -> None:
        experiment = config_service.load("sec33", {"days": 1})
        table = config_service.load_table(experiment, out_dir)
        traces = injector.get(TraceService).build_traces(experiment, table)
        assert list(traces) == ["DLRM-RMC1", "DLRM-RMC2"]
        assert traces["DLRM-RMC1"].peak == pytest.approx(0.35 * RMC1_CAPACITY)
        assert len(traces["DLRM-RMC1"].points) == 48

    def test_peak_fraction_requires_table(self, injector, config_service) -> None:
        experiment = config_service.load("sec33", {"days": 1})
        with pytest.raises(ValidateErrorException, match="效率表"):
            injector.get(TraceService).build_traces(experiment, None)

    def test_generate_writes_files(self, injector, config_service, sec33_table, sec33_availability, out_dir) -> None:
        experiment = config_service.load("sec33", {"days": 1})
        result = injector.get(TraceService).generate(experiment, sec33_table, sec33_availability, out_dir)
        for info in result["traces"].values():
            assert Path(info["file"]).is_file()
            assert info["points"] == 48

    def test_trace_file_workload(self, injector, config_service, tmp_path) -> None:
        trace_path = tmp_path / "w.csv"
        trace_path.write_text("time_s,qps\n0,10\n1800,20\n", encoding="utf-8")
        experiment = config_service.load(None, {"workloads": [{"model": "DLRM-RMC1", "trace_file": str(trace_path)}]})
        traces = injector.get(TraceService).build_traces(experiment, None)
        assert traces["DLRM-RMC1"].loads == [10.0, 20.0]


class TestServeService:
    def test_serve_writes_timelines(self, injector, config_service, written_table, out_dir) -> None:
        experiment = config_service.load("sec33", {"days": 1, "policies": ["greedy", "priority", "hercules"]})
        result = injector.get(ServeService).serve(experiment, out_dir)
        assert len(result["timelines"]) == 3
        assert all(Path(f).is_file() for f in result["timelines"])
        summary = yaml.safe_load((out_dir / SUMMARY_FILE_NAME).read_text(encoding="utf-8"))
        policies = {p["policy"]: p for p in summary["policies"]}
        assert policies["hercules"]["avg_power_w"] <= policies["greedy"]["avg_power_w"] + 1e-6
        assert summary["savings_vs_greedy"]["hercules"]["avg_pct"] >= 0.0
        assert summary["savings_vs_nh"] == {}

    def test_serve_is_deterministic(self, injector, config_service, written_table, out_dir) -> None:
        experiment = config_service.load("sec33", {"days": 1, "policies": ["nh", "hercules"]})
        service = injector.get(ServeService)
        first = service.serve(experiment, out_dir)
        second = service.serve(experiment, out_dir)
        assert first == second


class TestEvolveService:
    def test_requires_clusters(self, injector, config_service, written_table, out_dir) -> None:
        experiment = config_service.load(None)
        with pytest.raises(ValidateErrorException, match="clusters"):
            injector.get(EvolveService).evolve(experiment, out_dir)

    def test_small_evolution(self, injector, config_service, sec33_availability, written_table, out_dir) -> None:
        evolution = {
            "old_models": ["DLRM-RMC1"],
            "new_models": ["DLRM-RMC2"],
            "shift": [0.0, 1.0],
            "total_peak_fraction": 0.3,
            "clusters": {"sec33": sec33_availability},
        }
        experiment = config_service.load(None, {"evolution": evolution, "setup_delay_s": 0.0})
        result = injector.get(EvolveService).evolve(experiment, out_dir)
        assert (out_dir / EVOLVE_FILE_NAME).is_file()
        points = result["clusters"]["sec33"]
        assert [p["shift"] for p in points] == [0.0, 1.0]
        assert all(p["violations"] == 0 for p in points)
        assert result["growth"]["sec33"]["peak_power_ratio"] > 0


class TestFullScenario:
    """六个模型、十类服务器、七天轨迹、按历史估计超额供给率"""

    @pytest.fixture
    def full_table(self, catalog, make_entry, out_dir) -> EfficiencyTable:
        models = [m.name for m in catalog.get_models()]
        servers = [s.name for s in catalog.get_servers()]
        table = EfficiencyTable(
            entries=[
                make_entry(model, server, 50.0 * (i + 1) + 20.0 * j, 150.0 + 30.0 * i + 10.0 * j)
                for j, model in enumerate(models)
                for i, server in enumerate(servers)
            ],
        )
        (out_dir / TABLE_FILE_NAME).write_text(table.to_yaml(), encoding="utf-8")
        return table

    def _timeline(self, injector, config_service, out_dir, overrides: dict) -> tuple[ProvisionTimeline, dict]:
        experiment = config_service.load("full", {"policies": ["hercules"], **overrides})
        catalog = config_service.catalog(experiment)
        table = config_service.load_table(experiment, out_dir)
        availability = config_service.availability(experiment, catalog)
        traces = injector.get(TraceService).build_traces(experiment, table, availability)
        [timeline] = injector.get(ServeService).run_policies(experiment, table, traces, availability)
        return timeline, {"table": table, "availability": availability}

    def test_week_meets_constraints(self, injector, config_service, full_table, out_dir) -> None:
        timeline, context = self._timeline(injector, config_service, out_dir, {})
        assert len(timeline.workloads) == 6
        assert len(timeline.servers) == 10
        assert len(timeline.records) == 7 * 48
        summary = timeline.summary()
        assert summary.infeasible_intervals == 0
        assert summary.capacity_violations == 0
        availability = np.asarray(list(context["availability"].values()))
        for record in timeline.records:
            instance = build_lp(
                context["table"],
                dict(zip(timeline.workloads, record.loads, strict=True)),
                dict(zip(timeline.workloads, record.overprovision_pct, strict=True)),
                context["availability"],
            )
            counts = np.asarray(record.counts)
            capacity = (counts * instance.qps_matrix).sum(axis=0)
            assert np.all(capacity >= instance.demand * (1 - 1e-9)), f"Under-provisioned at t={record.time_s}"
            assert np.all(counts.sum(axis=1) <= availability), f"Over capacity at t={record.time_s}"

    def test_week_without_setup_delay(self, injector, config_service, full_table, out_dir) -> None:
        timeline, _ = self._timeline(injector, config_service, out_dir, {"setup_delay_s": 0.0})
        summary = timeline.summary()
        assert summary.load_violations == 0, f"Got {timeline.violations[:3]}"
        assert summary.infeasible_intervals == 0
