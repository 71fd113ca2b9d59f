from pathlib import Path

import pytest
import yaml

from app.cli.app import cli
from src.service.config_service import TABLE_FILE_NAME

SMALL_SCENARIO = """\
scenario: small
seed: 3
models: [DLRM-RMC1]
servers: [T2, T3]
batches: [16, 32, 64, 128]
availability:
  T2: 20
  T3: 5
workloads:
  - model: DLRM-RMC1
    peak_fraction: 0.5
    trough_ratio: 0.4
days: 1
setup_delay_s: 0
"""

EVOLVE_SCENARIO = SMALL_SCENARIO.replace("models: [DLRM-RMC1]", "models: [DLRM-RMC1, DLRM-RMC2]") + """\
evolution:
  old_models: [DLRM-RMC1]
  new_models: [DLRM-RMC2]
  shift: [0.0, 0.5, 1.0]
  total_peak_fraction: 0.3
  clusters:
    small:
      T2: 20
      T3: 5
"""


@pytest.fixture
def scenario(tmp_path) -> Path:
    path = tmp_path / "small.yaml"
    path.write_text(SMALL_SCENARIO, encoding="utf-8")
    return path


def _invoke(runner, *args: str):
    result = runner.invoke(cli, list(args))
    return result, yaml.safe_load(result.output)


class TestValidateConfig:
    def test_builtin_scenario(self, runner) -> None:
        result, payload = _invoke(runner, "validate-config", "--config", "sec33")
        assert result.exit_code == 0, result.output
        assert payload["code"] == "success"
        assert payload["data"]["servers"] == ["T2", "T3", "T7"]

    def test_unknown_model(self, runner) -> None:
        result, payload = _invoke(runner, "validate-config", "--models", "RMC9")
        assert result.exit_code == 2
        assert payload["code"] == "validate_error"
        assert "models" in payload["data"]

    def test_bad_field(self, runner, tmp_path) -> None:
        path = tmp_path / "bad.yaml"
        path.write_text("scenario: bad\nr_mode: sometimes\n", encoding="utf-8")
        result, payload = _invoke(runner, "validate-config", "--config", str(path))
        assert result.exit_code == 2
        assert payload["data"]["field"] == "r_mode"


class TestServe:
    def test_missing_table(self, runner, out_dir) -> None:
        result, payload = _invoke(runner, "serve", "--config", "sec33", "--out-dir", str(out_dir))
        assert result.exit_code == 4
        assert "hercules profile" in payload["message"]

    def test_profile_then_serve(self, runner, scenario, out_dir) -> None:
        result, payload = _invoke(runner, "profile", "--config", str(scenario), "--out-dir", str(out_dir))
        assert result.exit_code == 0, result.output
        assert payload["data"]["entries"] == 2
        assert (out_dir / TABLE_FILE_NAME).is_file()

        result, payload = _invoke(
            runner, "serve", "--config", str(scenario), "--out-dir", str(out_dir), "--policies", "greedy,hercules",
        )
        assert result.exit_code == 0, result.output
        assert [p["policy"] for p in payload["data"]["policies"]] == ["greedy", "hercules"]
        assert all(p["load_violations"] == 0 for p in payload["data"]["policies"])

    def test_output_is_deterministic(self, runner, scenario, sec33_table, out_dir) -> None:
        (out_dir / TABLE_FILE_NAME).write_text(sec33_table.to_yaml(), encoding="utf-8")
        args = ("serve", "--config", str(scenario), "--out-dir", str(out_dir), "--policies", "nh,hercules")
        first, _ = _invoke(runner, *args)
        second, _ = _invoke(runner, *args)
        assert first.exit_code == 0, first.output
        assert first.output == second.output


class TestTraceGen:
    def test_without_table_needs_fixed_peak(self, runner, scenario, out_dir) -> None:
        result, _ = _invoke(runner, "trace-gen", "--config", str(scenario), "--out-dir", str(out_dir))
        assert result.exit_code == 2

    def test_with_table(self, runner, scenario, sec33_table, out_dir) -> None:
        (out_dir / TABLE_FILE_NAME).write_text(sec33_table.to_yaml(), encoding="utf-8")
        result, payload = _invoke(runner, "trace-gen", "--config", str(scenario), "--out-dir", str(out_dir))
        assert result.exit_code == 0, result.output
        info = payload["data"]["traces"]["DLRM-RMC1"]
        assert info["points"] == 48
        # 0.5 * (20 * 100 + 5 * 250)
        assert info["peak_qps"] == pytest.approx(1625.0)
        assert Path(info["file"]).is_file()


class TestEvolve:
    def test_requires_clusters(self, runner, scenario, sec33_table, out_dir) -> None:
        (out_dir / TABLE_FILE_NAME).write_text(sec33_table.to_yaml(), encoding="utf-8")
        result, payload = _invoke(runner, "evolve", "--config", str(scenario), "--out-dir", str(out_dir))
        assert result.exit_code == 2
        assert "evolution" in payload["data"]


class TestDeterminism:
    @staticmethod
    def _run_all(runner, scenario: Path, out_dir: Path) -> tuple[list[str], dict[str, bytes]]:
        outputs = []
        for command in ("profile", "serve", "trace-gen", "evolve"):
            result = runner.invoke(cli, [command, "--config", str(scenario), "--out-dir", str(out_dir), "--seed", "11"])
            assert result.exit_code == 0, f"{command}: {result.output}"
            outputs.append(result.output.replace(str(out_dir), "<out>"))
        files = {str(p.relative_to(out_dir)): p.read_bytes() for p in sorted(out_dir.rglob("*")) if p.is_file()}
        return outputs, files

    def test_same_seed_same_bytes(self, runner, tmp_path) -> None:
        scenario = tmp_path / "evolve.yaml"
        scenario.write_text(EVOLVE_SCENARIO, encoding="utf-8")
        first_out, first_files = self._run_all(runner, scenario, tmp_path / "first")
        second_out, second_files = self._run_all(runner, scenario, tmp_path / "second")
        assert first_out == second_out
        assert {TABLE_FILE_NAME, "search_traces.yaml", "serve_summary.yaml", "evolve.csv"} <= set(first_files)
        assert first_files.keys() == second_files.keys()
        for name, content in first_files.items():
            assert content == second_files[name], f"{name} differs between runs"
