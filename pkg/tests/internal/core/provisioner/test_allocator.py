import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from src.core.provisioner import (
    AllocationMatrix,
    LPInstance,
    build_lp,
    check_feasibility,
    greedy_allocate,
    hercules_allocate,
    nh_allocate,
    priority_allocate,
    round_and_repair,
    solve_lp,
)
from src.exception import InfeasibleException


def _random_instance(seed: int) -> LPInstance:
    """随机的可行供给问题：各工作负载的需求合计不超过总容量的 15%"""
    rng = np.random.default_rng(seed)
    h, m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    qps = rng.uniform(50.0, 300.0, size=(h, m))
    power = rng.uniform(100.0, 500.0, size=(h, m))
    availability = rng.integers(10, 40, size=h)
    capacity = (qps * availability[:, None]).sum(axis=0)
    loads = capacity * rng.uniform(0.05, 0.15, size=m) / m
    return LPInstance(
        servers=[f"S{i}" for i in range(h)],
        workloads=[f"W{j}" for j in range(m)],
        qps=qps.tolist(),
        power=power.tolist(),
        loads=loads.tolist(),
        overprovision_pct=rng.uniform(0.0, 20.0, size=m).tolist(),
        availability=availability.tolist(),
    )


def _vertex_optimum(instance: LPInstance) -> float:
    """枚举全部顶点求线性松弛最优值：任取 n 条约束取等号求解，保留可行解中的最小目标"""
    c, a_ub, b_ub = instance.to_standard()
    n = c.shape[0]
    a = np.vstack([a_ub, -np.eye(n)])
    b = np.concatenate([b_ub, np.zeros(n)])
    combos = np.array(list(itertools.combinations(range(b.shape[0]), n)))
    systems = a[combos]
    keep = np.abs(np.linalg.det(systems)) > 1e-9
    vertices = np.linalg.solve(systems[keep], b[combos][keep][..., None])[..., 0]
    slack = 1e-9 * (1.0 + np.abs(b))
    feasible = np.all(vertices @ a.T <= b + slack, axis=1)
    assert feasible.any(), "Expected at least one feasible vertex"
    return float((vertices[feasible] @ c).min())


@pytest.mark.parametrize("seed", list(range(100)))
class TestAllocatorRandom:
    def test_lp_matches_vertex_enumeration(self, seed) -> None:
        instance = _random_instance(seed)
        expected = _vertex_optimum(instance)
        _, objective = solve_lp(instance)
        assert objective == pytest.approx(expected, rel=1e-9), f"Expected vertex optimum {expected}, got {objective}"

    def test_lp_matches_reference_optimum(self, seed) -> None:
        instance = _random_instance(seed)
        c, a_ub, b_ub = instance.to_standard()
        reference = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
        x, objective = solve_lp(instance)
        assert objective == pytest.approx(reference.fun, rel=1e-6, abs=1e-6), (
            f"Expected LP optimum {reference.fun}, got {objective}"
        )
        assert x.shape == instance.shape

    def test_integer_policies_feasible_and_bounded_by_lp(self, seed) -> None:
        instance = _random_instance(seed)
        _, lower = solve_lp(instance)
        for name, matrix in (
            ("hercules", hercules_allocate(instance)),
            ("greedy", greedy_allocate(instance)),
            ("priority", priority_allocate(instance)),
            ("nh", nh_allocate(instance, seed)),
        ):
            assert check_feasibility(matrix, instance) == [], f"{name} allocation violates constraints"
            assert matrix.objective(instance) >= lower - 1e-6, f"{name} beats the LP relaxation"

    def test_hercules_not_worse_than_greedy(self, seed) -> None:
        instance = _random_instance(seed)
        hercules = hercules_allocate(instance).objective(instance)
        greedy = greedy_allocate(instance).objective(instance)
        priority = priority_allocate(instance).objective(instance)
        assert hercules <= priority + 1e-9, f"Expected hercules {hercules} <= priority {priority}"
        assert priority <= greedy + 1e-9, f"Expected priority {priority} <= greedy {greedy}"


class TestBuildLp:
    def test_shape_and_demand(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 1000.0, "DLRM-RMC2": 500.0}, 10.0, sec33_availability)
        assert instance.shape == (3, 2)
        assert instance.demand.tolist() == pytest.approx([1100.0, 550.0])

    def test_per_workload_overprovision(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(
            sec33_table, {"DLRM-RMC1": 100.0, "DLRM-RMC2": 100.0}, {"DLRM-RMC2": 50.0}, sec33_availability,
        )
        assert instance.overprovision_pct == [0.0, 50.0]

    def test_zero_qps_workload_infeasible(self, sec33_table, sec33_availability) -> None:
        with pytest.raises(InfeasibleException) as exc:
            build_lp(sec33_table, {"DIN": 10.0}, 0.0, sec33_availability)
        assert exc.value.data["workload"] == "DIN"

    def test_zero_load_allocates_nothing(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 0.0, "DLRM-RMC2": 0.0}, 0.0, sec33_availability)
        assert hercules_allocate(instance).total_servers == 0
        assert greedy_allocate(instance).total_servers == 0


class TestInfeasibility:
    def test_lp_reports_blocking_workload(self, sec33_table, sec33_availability) -> None:
        # RMC2 总容量为 70*40 + 15*60 + 5*300 = 5200
        instance = build_lp(sec33_table, {"DLRM-RMC1": 100.0, "DLRM-RMC2": 6000.0}, 0.0, sec33_availability)
        with pytest.raises(InfeasibleException) as exc:
            solve_lp(instance)
        assert "DLRM-RMC2" in exc.value.data["workloads"], f"Expected RMC2 blocked, got {exc.value.data}"
        assert exc.value.data["capacity"]["DLRM-RMC2"] == pytest.approx(5200.0)

    def test_baselines_raise(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 100.0, "DLRM-RMC2": 6000.0}, 0.0, sec33_availability)
        for allocate in (greedy_allocate, priority_allocate, nh_allocate):
            with pytest.raises(InfeasibleException):
                allocate(instance)

    def test_best_effort_greedy_respects_availability(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 100.0, "DLRM-RMC2": 6000.0}, 0.0, sec33_availability)
        matrix = greedy_allocate(instance, best_effort=True)
        used = matrix.array.sum(axis=1)
        assert all(used[i] <= n for i, n in enumerate(instance.availability)), f"Got {used.tolist()}"


class TestContention:
    """RMC1 需求超过 T3 的全部容量时，贪心会把 T7 耗在 RMC1 上"""

    loads = {"DLRM-RMC1": 4500.0, "DLRM-RMC2": 1000.0}

    def test_greedy_exhausts_accelerators(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, self.loads, 0.0, sec33_availability)
        counts = greedy_allocate(instance).array
        t7 = instance.servers.index("T7")
        assert counts[t7, 0] == 5, f"Expected RMC1 to take all T7, got {counts.tolist()}"
        assert counts[t7, 1] == 0
        assert greedy_allocate(instance).objective(instance) == pytest.approx(10700.0)

    def test_priority_gives_accelerators_to_largest_gain(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, self.loads, 0.0, sec33_availability)
        matrix = priority_allocate(instance)
        t7 = instance.servers.index("T7")
        assert matrix.array[t7, 1] == 4, f"Expected RMC2 to get 4 T7, got {matrix.array.tolist()}"
        assert matrix.objective(instance) == pytest.approx(7020.0)

    def test_hercules_not_worse_than_priority(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, self.loads, 0.0, sec33_availability)
        _, lower = solve_lp(instance)
        hercules = hercules_allocate(instance).objective(instance)
        assert lower <= hercules <= 7020.0 + 1e-9, f"Got LP {lower}, hercules {hercules}"

    def test_random_baseline_costlier_on_average(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, self.loads, 0.0, sec33_availability)
        hercules = hercules_allocate(instance).objective(instance)
        costs = [nh_allocate(instance, seed).objective(instance) for seed in range(30)]
        assert np.mean(costs) > hercules, f"Expected mean random cost above {hercules}, got {np.mean(costs)}"

    def test_random_baseline_deterministic(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, self.loads, 0.0, sec33_availability)
        assert nh_allocate(instance, 7).counts == nh_allocate(instance, 7).counts


class TestRoundAndRepair:
    def test_repairs_over_availability(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 3000.0, "DLRM-RMC2": 1200.0}, 0.0, sec33_availability)
        # 人为构造超出 T7 可用台数的分数解
        fractional = np.zeros(instance.shape)
        fractional[instance.servers.index("T7")] = [4.5, 4.5]
        fractional[instance.servers.index("T3")] = [12.0, 0.0]
        matrix = round_and_repair(fractional, instance)
        assert check_feasibility(matrix, instance) == [], "Expected a feasible repaired allocation"

    def test_check_feasibility_flags_each_violation(self, sec33_table, sec33_availability) -> None:
        instance = build_lp(sec33_table, {"DLRM-RMC1": 500.0, "DLRM-RMC2": 0.0}, 0.0, sec33_availability)
        counts = np.zeros(instance.shape, dtype=np.int64)
        counts[instance.servers.index("T7"), 0] = 6
        problems = check_feasibility(AllocationMatrix.from_array(instance, counts), instance)
        assert any("可用" in p for p in problems), f"Expected an availability violation, got {problems}"

        counts[instance.servers.index("T7"), 0] = 1
        problems = check_feasibility(AllocationMatrix.from_array(instance, counts), instance)
        assert any("需求" in p for p in problems), f"Expected a load violation, got {problems}"


class TestNearlyFilledDemand:
    """首选类型只差极小缺口时，次选类型仍需补上一台"""

    @staticmethod
    def _instance() -> LPInstance:
        return LPInstance(
            servers=["A", "B"],
            workloads=["W"],
            qps=[[999.999998], [5000.0]],
            power=[[100.0], [1000.0]],
            loads=[1000.0],
            overprovision_pct=[0.0],
            availability=[1, 5],
        )

    def test_greedy_adds_unit_for_tiny_remainder(self) -> None:
        instance = self._instance()
        matrix = greedy_allocate(instance, "qps_per_watt")
        assert matrix.counts == [[1], [1]], f"Got {matrix.counts}"
        assert check_feasibility(matrix, instance) == []

    def test_priority_terminates(self) -> None:
        instance = self._instance()
        matrix = priority_allocate(instance, "qps_per_watt")
        assert check_feasibility(matrix, instance) == []
        assert matrix.objective(instance) == pytest.approx(1100.0)

    def test_repair_fills_tiny_shortfall(self) -> None:
        instance = self._instance()
        matrix = round_and_repair(np.array([[1.0], [0.0]]), instance, "qps_per_watt")
        assert check_feasibility(matrix, instance) == []
        assert matrix.objective(instance) == pytest.approx(1000.0)
