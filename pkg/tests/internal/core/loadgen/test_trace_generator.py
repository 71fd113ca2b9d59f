import pytest

from src.core.loadgen import (
    LoadTrace,
    estimate_overprovision_rate,
    format_trace,
    gen_diurnal_trace,
    ingest_trace,
    interval_loads,
    mix_traces,
    parse_trace,
    scale_trace,
)
from src.exception import ValidateErrorException


class TestDiurnalTrace:
    def test_peak_and_trough(self) -> None:
        trace = gen_diurnal_trace(1000.0, 2, 0.4, interval_s=1800.0)
        assert len(trace.points) == 96
        assert trace.peak == pytest.approx(1000.0)
        assert min(trace.loads) == pytest.approx(400.0)
        assert trace.load_at(0.0) == pytest.approx(1000.0)
        assert trace.load_at(43200.0) == pytest.approx(400.0)

    def test_peak_time_shift(self) -> None:
        trace = gen_diurnal_trace(1000.0, 1, 0.5, interval_s=3600.0, peak_time_s=7200.0)
        assert trace.load_at(7200.0) == pytest.approx(1000.0)

    def test_noise_bounded_and_seeded(self) -> None:
        clean = gen_diurnal_trace(1000.0, 1, 0.4)
        noisy = gen_diurnal_trace(1000.0, 1, 0.4, noise=0.1, seed=9)
        for (_, base), (_, value) in zip(clean.points, noisy.points, strict=True):
            assert base * 0.9 - 1e-9 <= value <= base * 1.1 + 1e-9
        assert noisy == gen_diurnal_trace(1000.0, 1, 0.4, noise=0.1, seed=9)

    @pytest.mark.parametrize(("trough", "noise"), [(0.0, 0.0), (1.0, 0.0), (0.5, 1.0), (0.5, -0.1)])
    def test_invalid_parameters(self, trough, noise) -> None:
        with pytest.raises(ValidateErrorException):
            gen_diurnal_trace(100.0, 1, trough, noise=noise)

    def test_zero_days(self) -> None:
        assert gen_diurnal_trace(100.0, 0, 0.5).points == []


class TestParseTrace:
    def test_header_and_interval(self) -> None:
        trace = parse_trace("time_s,qps\n0,10\n600,20\n1200,15\n", workload="w")
        assert trace.points == [(0.0, 10.0), (600.0, 20.0), (1200.0, 15.0)]
        assert trace.interval_s == 600.0

    @pytest.mark.parametrize(
        ("text", "row"),
        [
            ("0,10\n60,abc\n", 2),
            ("0,10\n60\n", 2),
            ("0,10\n60,-1\n", 2),
            ("0,10\n60,5\n30,5\n", 3),
        ],
    )
    def test_errors_carry_row(self, text, row) -> None:
        with pytest.raises(ValidateErrorException) as exc:
            parse_trace(text)
        assert exc.value.data["row"] == row, f"Expected row {row}, got {exc.value.data}"

    def test_empty(self) -> None:
        with pytest.raises(ValidateErrorException, match="为空"):
            parse_trace("time_s,qps\n")

    def test_file_round_trip(self, tmp_path) -> None:
        trace = gen_diurnal_trace(123.456, 1, 0.3, noise=0.05, seed=1, workload="rmc1")
        path = tmp_path / "rmc1.csv"
        path.write_text(format_trace(trace), encoding="utf-8")
        assert ingest_trace(path).points == trace.points


class TestOverprovisionRate:
    def test_max_growth(self) -> None:
        trace = LoadTrace(points=[(0.0, 100.0), (1800.0, 150.0), (3600.0, 120.0), (5400.0, 132.0)])
        assert estimate_overprovision_rate(trace, 1800.0) == pytest.approx(50.0)

    def test_window_uses_tail(self) -> None:
        trace = LoadTrace(points=[(0.0, 100.0), (1800.0, 150.0), (3600.0, 120.0), (5400.0, 132.0)])
        assert estimate_overprovision_rate(trace, 1800.0, window_s=1800.0) == pytest.approx(10.0)

    def test_decreasing_load(self) -> None:
        trace = LoadTrace(points=[(0.0, 100.0), (1800.0, 80.0)])
        assert estimate_overprovision_rate(trace, 1800.0) == 0.0

    def test_requires_two_intervals(self) -> None:
        with pytest.raises(ValidateErrorException):
            estimate_overprovision_rate(LoadTrace(points=[(0.0, 100.0), (600.0, 120.0)]), 1800.0)

    def test_interval_peaks(self) -> None:
        trace = LoadTrace(points=[(0.0, 1.0), (600.0, 5.0), (1200.0, 2.0), (1800.0, 3.0), (4000.0, 4.0)])
        assert interval_loads(trace, 1800.0) == [5.0, 3.0, 4.0]


class TestCombine:
    def test_scale_and_mix(self) -> None:
        a = LoadTrace(workload="a", points=[(0.0, 1.0), (60.0, 2.0)])
        b = LoadTrace(workload="b", points=[(0.0, 3.0), (60.0, 4.0)])
        assert scale_trace(a, 2.0).loads == [2.0, 4.0]
        assert mix_traces([a, b], "ab").loads == [4.0, 6.0]

    def test_mix_requires_aligned_times(self) -> None:
        a = LoadTrace(points=[(0.0, 1.0)])
        b = LoadTrace(points=[(30.0, 1.0)])
        with pytest.raises(ValidateErrorException):
            mix_traces([a, b])
