import numpy as np
import pytest

from src.core.loadgen import LoadTrace, gen_diurnal_trace
from src.core.provisioner import (
    ProvisionSummary,
    RefreshSample,
    allocate,
    build_lp,
    refresh_efficiency,
    run_cluster_sim,
    savings,
)
from src.core.serversim import SimReport
from src.exception import ValidateErrorException


def _constant(workload: str, qps: float, points: int = 48, interval_s: float = 1800.0) -> LoadTrace:
    return LoadTrace(workload=workload, interval_s=interval_s, points=[(i * interval_s, qps) for i in range(points)])


def _diurnal() -> dict[str, LoadTrace]:
    return {
        "DLRM-RMC1": gen_diurnal_trace(2000.0, 1, 0.4, interval_s=1800.0, workload="DLRM-RMC1"),
        "DLRM-RMC2": gen_diurnal_trace(800.0, 1, 0.4, interval_s=1800.0, workload="DLRM-RMC2", peak_time_s=3600.0),
    }


class TestConstantLoad:
    def test_allocation_is_stable(self, sec33_table, sec33_availability) -> None:
        traces = {"DLRM-RMC1": _constant("DLRM-RMC1", 1000.0), "DLRM-RMC2": _constant("DLRM-RMC2", 500.0)}
        timeline = run_cluster_sim(traces, sec33_table, sec33_availability, setup_delay_s=0.0)
        first = timeline.records[0].counts
        assert all(r.counts == first for r in timeline.records), "Expected identical allocations every interval"
        assert timeline.summary().load_violations == 0
        assert timeline.released == 0

    def test_setup_delay_only_hurts_first_interval(self, sec33_table, sec33_availability) -> None:
        traces = {"DLRM-RMC1": _constant("DLRM-RMC1", 1000.0), "DLRM-RMC2": _constant("DLRM-RMC2", 500.0)}
        timeline = run_cluster_sim(traces, sec33_table, sec33_availability, setup_delay_s=30.0)
        events = [v for v in timeline.violations if v.kind == "load"]
        assert len(events) == 2, f"Expected one load violation per workload, got {len(events)}"
        assert all(v.time_s == 0.0 for v in events)


@pytest.mark.parametrize("r_mode", ["fixed", "estimated"])
class TestDiurnal:
    def test_records_satisfy_load_constraint(self, r_mode, sec33_table, sec33_availability) -> None:
        timeline = run_cluster_sim(
            _diurnal(), sec33_table, sec33_availability, setup_delay_s=0.0, r_mode=r_mode, r_pct=10.0,
        )
        assert len(timeline.records) == 48
        summary = timeline.summary()
        assert summary.load_violations == 0, f"Got {timeline.violations[:3]}"
        assert summary.capacity_violations == 0
        assert summary.infeasible_intervals == 0
        for record in timeline.records:
            instance = build_lp(
                sec33_table,
                dict(zip(timeline.workloads, record.loads, strict=True)),
                dict(zip(timeline.workloads, record.overprovision_pct, strict=True)),
                sec33_availability,
            )
            capacity = (np.asarray(record.counts) * instance.qps_matrix).sum(axis=0)
            assert np.all(capacity >= instance.demand * (1 - 1e-9)), f"Under-provisioned at t={record.time_s}"

    def test_policy_dominance(self, r_mode, sec33_table, sec33_availability) -> None:
        summaries = {
            policy: run_cluster_sim(
                _diurnal(), sec33_table, sec33_availability, policy=policy, r_mode=r_mode, r_pct=10.0,
            ).summary()
            for policy in ("hercules", "priority", "greedy")
        }
        hercules, priority, greedy = summaries["hercules"], summaries["priority"], summaries["greedy"]
        assert hercules.avg_power_w <= priority.avg_power_w + 1e-6
        assert priority.avg_power_w <= greedy.avg_power_w + 1e-6
        assert hercules.peak_power_w <= greedy.peak_power_w + 1e-6

    def test_deterministic(self, r_mode, sec33_table, sec33_availability) -> None:
        first = run_cluster_sim(_diurnal(), sec33_table, sec33_availability, policy="nh", r_mode=r_mode, seed=3)
        second = run_cluster_sim(_diurnal(), sec33_table, sec33_availability, policy="nh", r_mode=r_mode, seed=3)
        assert first.to_rows() == second.to_rows()


class TestOverprovisionEstimate:
    def test_falls_back_without_history(self, sec33_table, sec33_availability) -> None:
        timeline = run_cluster_sim(_diurnal(), sec33_table, sec33_availability, r_mode="estimated", r_pct=7.0)
        assert timeline.records[0].overprovision_pct == [7.0, 7.0]
        assert all(r >= 0 for record in timeline.records for r in record.overprovision_pct)

    def test_estimated_rate_tracks_growth(self, sec33_table, sec33_availability) -> None:
        trace = LoadTrace(
            workload="DLRM-RMC1",
            interval_s=1800.0,
            points=[(0.0, 100.0), (1800.0, 150.0), (3600.0, 150.0), (5400.0, 150.0)],
        )
        timeline = run_cluster_sim({"DLRM-RMC1": trace}, sec33_table, sec33_availability, r_mode="estimated")
        assert timeline.records[-1].overprovision_pct == [pytest.approx(50.0)]


class TestInfeasibleIntervals:
    def test_best_effort_continues(self, sec33_table, sec33_availability) -> None:
        traces = {"DLRM-RMC1": _constant("DLRM-RMC1", 100.0, 4), "DLRM-RMC2": _constant("DLRM-RMC2", 6000.0, 4)}
        timeline = run_cluster_sim(traces, sec33_table, sec33_availability, setup_delay_s=0.0)
        summary = timeline.summary()
        assert summary.infeasible_intervals == 4
        assert summary.capacity_violations == 0
        starved = [v for v in timeline.violations if v.kind == "load" and v.workload == "DLRM-RMC2"]
        assert len(starved) == 4, "Expected RMC2 under-provisioned at every point"
        assert all(r.infeasible for r in timeline.records)
        for record in timeline.records:
            used = np.asarray(record.counts).sum(axis=1)
            assert all(u <= n for u, n in zip(used, sec33_availability.values(), strict=True)), f"Got {used}"


class TestValidation:
    def test_empty_traces(self, sec33_table, sec33_availability) -> None:
        with pytest.raises(ValidateErrorException):
            run_cluster_sim({}, sec33_table, sec33_availability)

    def test_misaligned_traces(self, sec33_table, sec33_availability) -> None:
        traces = {"DLRM-RMC1": _constant("DLRM-RMC1", 10.0, 4), "DLRM-RMC2": _constant("DLRM-RMC2", 10.0, 5)}
        with pytest.raises(ValidateErrorException, match="时间点"):
            run_cluster_sim(traces, sec33_table, sec33_availability)

    def test_non_positive_interval(self, sec33_table, sec33_availability) -> None:
        with pytest.raises(ValidateErrorException):
            run_cluster_sim({"DLRM-RMC1": _constant("DLRM-RMC1", 10.0)}, sec33_table, sec33_availability, interval_s=0)

    def test_unknown_policy(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 10.0}, 0.0, sec33_availability)
        with pytest.raises(ValidateErrorException):
            allocate(instance, "random")


class TestSavings:
    def test_relative_to_baseline(self) -> None:
        def summary(policy: str, peak: float, avg: float) -> ProvisionSummary:
            return ProvisionSummary(
                policy=policy, peak_servers=1, avg_servers=1.0, peak_power_w=peak, avg_power_w=avg,
                load_violations=0, capacity_violations=0, infeasible_intervals=0,
            )

        result = savings([summary("greedy", 1000.0, 800.0), summary("hercules", 800.0, 600.0)], "greedy")
        assert result == {"hercules": {"peak_pct": pytest.approx(20.0), "avg_pct": pytest.approx(25.0)}}
        assert savings([summary("hercules", 1.0, 1.0)], "nh") == {}


class TestRefreshEfficiency:
    @staticmethod
    def _report(achieved_qps: float, avg_power_w: float) -> SimReport:
        return SimReport(
            offered_qps=achieved_qps,
            achieved_qps=achieved_qps,
            tail_latency_s=0.01,
            mean_latency_s=0.005,
            avg_power_w=avg_power_w,
            peak_power_w=avg_power_w,
            arrivals=10,
            completed=10,
            dropped=0,
            in_flight=0,
        )

    def test_moving_average(self, sec33_table) -> None:
        samples = [RefreshSample("DLRM-RMC1", "T2", self._report(80.0, 150.0))]
        table = refresh_efficiency(sec33_table, samples)
        entry = table.get("DLRM-RMC1", "T2")
        assert entry.qps == pytest.approx(96.0), f"Expected 0.8*100+0.2*80, got {entry.qps}"
        assert entry.power_w == pytest.approx(190.0)
        assert table.get("DLRM-RMC2", "T7").qps == 300.0
        assert [(e.model, e.server) for e in table.entries] == [(e.model, e.server) for e in sec33_table.entries]

    def test_power_never_exceeds_profile(self, sec33_table) -> None:
        samples = [RefreshSample("DLRM-RMC1", "T2", self._report(100.0, 400.0))]
        assert refresh_efficiency(sec33_table, samples).get("DLRM-RMC1", "T2").power_w == 200.0

    def test_unknown_pair_ignored(self, sec33_table) -> None:
        samples = [RefreshSample("DIN", "T2", self._report(100.0, 100.0))]
        assert refresh_efficiency(sec33_table, samples).entries == sec33_table.entries


class TestBoundaryLoads:
    @staticmethod
    def _rising() -> dict[str, LoadTrace]:
        points = [(i * 600.0, 1000.0 + 100.0 * i) for i in range(6)]
        return {"DLRM-RMC1": LoadTrace(workload="DLRM-RMC1", interval_s=600.0, points=points)}

    def test_sizes_from_interval_start(self, sec33_table, sec33_availability) -> None:
        timeline = run_cluster_sim(self._rising(), sec33_table, sec33_availability, setup_delay_s=0.0)
        assert [r.loads for r in timeline.records] == [[1000.0], [1300.0]]
        lagging = [v.time_s for v in timeline.violations if v.kind == "load" and v.time_s < 1800.0]
        assert lagging == [600.0, 1200.0], f"Got {lagging}"

    def test_overprovision_covers_growth(self, sec33_table, sec33_availability) -> None:
        timeline = run_cluster_sim(
            self._rising(), sec33_table, sec33_availability, setup_delay_s=0.0, r_mode="fixed", r_pct=20.0,
        )
        assert timeline.summary().load_violations == 0
        assert timeline.records[0].counts == [[0], [5], [0]]


class TestRankBy:
    @pytest.mark.parametrize(
        ("rank_by", "expected"),
        [("qps", [[0], [15], [5]]), ("qps_per_watt", [[8], [15], [0]])],
    )
    def test_greedy_order(self, rank_by, expected, sec33_table, sec33_availability) -> None:
        traces = {"DLRM-RMC1": _constant("DLRM-RMC1", 4500.0, 4)}
        timeline = run_cluster_sim(
            traces, sec33_table, sec33_availability, policy="greedy", setup_delay_s=0.0, rank_by=rank_by,
        )
        assert all(r.counts == expected for r in timeline.records), f"Got {timeline.records[0].counts}"
        assert timeline.summary().load_violations == 0
