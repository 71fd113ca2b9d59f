import numpy as np
import pytest

from src.core.catalog import SizeClass
from src.core.partitioner import (
    AccessProfile,
    Partitioner,
    TableProfile,
    build_access_profile,
    enumerate_strategies,
    harmonic,
    partition_model,
    select_hot_rows,
)
from src.core.perfmodel import StrategyKind
from src.exception import InfeasibleException


def _profile(rows: list[int], weights: list[float], zipf_s: float = 0.9) -> AccessProfile:
    return AccessProfile(
        zipf_s=zipf_s,
        tables=[TableProfile(rows=r, weight=w, multiplier=1, offset=0) for r, w in zip(rows, weights, strict=True)],
    )


def _top_k_oracle(profile: AccessProfile, capacity: int) -> list[int]:
    """全部行按 (频率降序, 表序号, 名次) 排序后取前 capacity 行"""
    items = [
        (-profile.frequency(i, r), i, r)
        for i, table in enumerate(profile.tables)
        for r in range(table.rows)
    ]
    items.sort()
    counts = [0] * len(profile.tables)
    for _, index, _ in items[:capacity]:
        counts[index] += 1
    return counts


class TestSelectHotRows:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_sorted_oracle(self, seed) -> None:
        rng = np.random.default_rng(seed)
        rows = [int(r) for r in rng.integers(5, 60, size=4)]
        weights = [float(w) for w in rng.uniform(1.0, 50.0, size=4)]
        profile = _profile(rows, weights, zipf_s=float(rng.uniform(0.5, 1.5)))
        for capacity in (0, 1, 7, sum(rows) // 2, sum(rows) - 1, sum(rows), sum(rows) + 10):
            expected = _top_k_oracle(profile, capacity)
            got = select_hot_rows(profile, capacity)
            assert got == expected, f"capacity={capacity}: got {got}, expected {expected}"

    def test_ties_break_by_table_order(self) -> None:
        profile = _profile([10, 10], [5.0, 5.0])
        assert select_hot_rows(profile, 3) == [2, 1]

    def test_prod_scale_respects_capacity(self, catalog) -> None:
        profile = build_access_profile(catalog.get_model("DLRM-RMC2"), seed=1)
        capacity = 2_000_000
        counts = select_hot_rows(profile, capacity)
        assert sum(counts) == capacity
        assert all(0 <= c <= t.rows for c, t in zip(counts, profile.tables, strict=True))


class TestAccessProfile:
    def test_hit_rate_bounds(self) -> None:
        profile = _profile([20, 30], [2.0, 8.0])
        assert profile.hit_rate([0, 0]) == 0.0
        assert profile.hit_rate([20, 30]) == 1.0
        assert 0.0 < profile.hit_rate([5, 5]) < 1.0

    def test_harmonic_matches_direct_sum(self) -> None:
        expected = float(np.sum(np.arange(1, 1001, dtype=np.float64) ** -0.9))
        assert harmonic(1000, 0.9) == pytest.approx(expected)
        assert harmonic(0, 0.9) == 0.0

    def test_row_mapping_is_permutation(self, catalog) -> None:
        profile = build_access_profile(catalog.get_model("DLRM-RMC1"), seed=3, size_class=SizeClass.SMALL)
        table = profile.tables[0]
        rows = table.rank_to_row(np.arange(table.rows))
        assert np.unique(rows).size == table.rows

    def test_seeded(self, catalog) -> None:
        model = catalog.get_model("DLRM-RMC1")
        assert build_access_profile(model, seed=4) == build_access_profile(model, seed=4)
        assert build_access_profile(model, seed=4) != build_access_profile(model, seed=5)

    def test_invalid_zipf(self, catalog) -> None:
        with pytest.raises(ValueError):
            build_access_profile(catalog.get_model("DLRM-RMC1"), zipf_s=0.0)


class TestPartitionModel:
    def test_budget_respected(self, catalog, calibration) -> None:
        model, server = catalog.get_model("DLRM-RMC3"), catalog.get_server("T7")
        profile = build_access_profile(model, seed=0)
        plan = partition_model(model, server, 2, profile, calibration)
        assert plan.hot_bytes <= plan.budget_bytes
        assert plan.budget_bytes == pytest.approx(server.accel.hbm_bytes / 2 - plan.dense.weight_bytes)
        assert 0.0 < plan.hot_hit_rate <= 1.0
        assert plan.placement["sparse_hot"] == "accel"

    def test_hit_rate_drops_with_co_location(self, catalog) -> None:
        model, server = catalog.get_model("DLRM-RMC3"), catalog.get_server("T7")
        partitioner = Partitioner()
        rates = [partitioner.hot_hit_rate(model, server, m) for m in (1, 2, 4, 8)]
        assert all(a >= b for a, b in zip(rates, rates[1:])), f"Got {rates}"

    def test_dense_exceeds_budget(self, catalog) -> None:
        model, server = catalog.get_model("MT-WnD"), catalog.get_server("T7")
        with pytest.raises(InfeasibleException) as exc:
            partition_model(model, server, 2000, build_access_profile(model))
        assert exc.value.data["co_location"] == 2000

    def test_host_only_server(self, catalog) -> None:
        model, server = catalog.get_model("DLRM-RMC1"), catalog.get_server("T2")
        plan = partition_model(model, server, 1, build_access_profile(model))
        assert plan.hot_hit_rate == 0.0
        assert sum(plan.sparse_hot) == 0

    def test_invalid_co_location(self, catalog) -> None:
        model = catalog.get_model("DLRM-RMC1")
        with pytest.raises(ValueError):
            partition_model(model, catalog.get_server("T7"), 0, build_access_profile(model))


class TestEnumerateStrategies:
    def test_cpu_server(self, catalog) -> None:
        kinds = [s.kind for s in enumerate_strategies(catalog.get_model("DLRM-RMC1"), catalog.get_server("T2"))]
        assert kinds == [StrategyKind.MODEL_BASED, StrategyKind.SD_PIPELINE_HOST_ONLY]

    def test_accelerated_server(self, catalog) -> None:
        strategies = enumerate_strategies(catalog.get_model("DLRM-RMC1"), catalog.get_server("T7"))
        assert len(strategies) == 3
        assert all(s.uses_accel for s in strategies)
        assert {s.leftover for s in strategies} == {None, StrategyKind.MODEL_BASED, StrategyKind.SD_PIPELINE_HOST_ONLY}
