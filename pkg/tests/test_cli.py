import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from codedgrad.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, **overrides):
    doc = {
        "n": 8,
        "k": 4,
        "d": 5,
        "iterations": 4,
        "learning_rate": 0.2,
        "seed": 11,
        "dataset": {"M": 64, "seed": 2},
        "straggler_model": {"model": "shifted-exponential", "base": 0.1, "rate": 1.0},
        "schemes": [
            {"name": "naive"},
            {"name": "ignore-stragglers", "s": 2},
            {"name": "commfr-gc", "code": {"kind": "systematic-mds", "N": 4, "K": 2, "seed": 0}},
        ],
    }
    doc.update(overrides)
    Path(path).write_text(json.dumps(doc))
    return doc


class TestPlan:
    def test_mds_plan_optimal(self, runner):
        result = runner.invoke(
            main, ["plan", "--n", "8", "--k", "4", "--N", "4", "--K", "2",
                   "--code", "mds", "--seed", "1"],
        )
        assert result.exit_code == 0
        assert "(l=2, m=2, s=2), optimal" in result.output

    def test_repetition_plan(self, runner):
        result = runner.invoke(
            main, ["plan", "--n", "8", "--k", "4", "--N", "4", "--K", "1",
                   "--code", "repetition", "--seed", "1"],
        )
        assert result.exit_code == 0
        assert "(l=2, m=1, s=3)" in result.output

    def test_divisibility_exit_code(self, runner):
        result = runner.invoke(
            main, ["plan", "--n", "7", "--k", "4", "--N", "4", "--K", "2",
                   "--code", "mds", "--seed", "1"],
        )
        assert result.exit_code == 2
        assert "divide" in result.output


class TestRoundtrip:
    def test_two_stragglers_per_group_pass(self, runner):
        result = runner.invoke(
            main, ["roundtrip", "--n", "8", "--k", "4", "--N", "4", "--K", "2",
                   "--code", "mds", "--d", "4", "--erase", "3,4,7,8", "--seed", "5"],
        )
        assert result.exit_code == 0
        assert "pass" in result.output

    def test_three_stragglers_in_one_group_fails(self, runner):
        result = runner.invoke(
            main, ["roundtrip", "--n", "8", "--k", "4", "--N", "4", "--K", "2",
                   "--code", "mds", "--d", "4", "--erase", "1,2,3", "--seed", "5"],
        )
        assert result.exit_code == 1
        assert "unrecoverable-group(1)" in result.output

    def test_length_one_gradient(self, runner):
        result = runner.invoke(
            main, ["roundtrip", "--n", "8", "--k", "4", "--N", "4", "--K", "2",
                   "--code", "mds", "--d", "1", "--stragglers-per-group", "2",
                   "--seed", "5"],
        )
        assert result.exit_code == 0
        assert "pass" in result.output


class TestStability:
    def test_inline_rows_csv(self, runner):
        result = runner.invoke(main, ["stability", "--rows", "60,3,2;60,8,2"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "n,s,m,s_kappa_YA,s_kappa"
        assert lines[1] == "60,3,2,0,2"

    def test_default_grid_with_reference_constant(self, runner):
        result = runner.invoke(
            main, ["stability", "--default-grid", "--constant", "7.0"]
        )
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert len(lines) == 13
        assert lines[1] == "60,3,2,0,2"
        assert lines[8] == "1000,90,10,29,78"

    def test_inadmissible_row_warns_but_exits_zero(self, runner):
        result = runner.invoke(main, ["stability", "--rows", "8,2,2", "--kappa", "5"])
        assert result.exit_code == 0
        assert "8,2,2,," in result.output
        assert "warning" in result.output

    def test_empty_input_header_only(self, runner):
        result = runner.invoke(main, ["stability"])
        assert result.exit_code == 0
        assert result.output.strip() == "n,s,m,s_kappa_YA,s_kappa"

    def test_input_file(self, runner, tmp_path):
        rows = tmp_path / "rows.json"
        rows.write_text(json.dumps([[60, 3, 2]]))
        result = runner.invoke(main, ["stability", "--input", str(rows)])
        assert result.exit_code == 0
        assert "60,3,2,0,2" in result.output


class TestLdpcCommands:
    def test_threshold_value(self, runner):
        result = runner.invoke(main, ["ldpc-threshold", "--dv", "3", "--dc", "6"])
        assert result.exit_code == 0
        value = float(result.output.strip().split("=")[-1])
        assert abs(value - 0.4294) <= 1e-4

    def test_trial_no_erasures(self, runner):
        result = runner.invoke(
            main, ["ldpc-trial", "--N", "100", "--K", "50", "--dv", "3", "--dc", "6",
                   "--p", "0.0", "--trials", "5", "--seed", "0"],
        )
        assert result.exit_code == 0
        assert "success rate 1.000" in result.output

    def test_trial_moderate_erasures(self, runner):
        result = runner.invoke(
            main, ["ldpc-trial", "--N", "200", "--K", "100", "--dv", "3", "--dc", "6",
                   "--p", "0.3", "--trials", "20", "--seed", "1"],
        )
        assert result.exit_code == 0
        rate = float(result.output.split("success rate")[1].split()[0])
        assert rate >= 0.8

    def test_bad_degrees(self, runner):
        result = runner.invoke(
            main, ["ldpc-trial", "--N", "10", "--K", "5", "--dv", "3", "--dc", "5",
                   "--p", "0.1", "--seed", "0"],
        )
        assert result.exit_code == 2


class TestSimulate:
    def test_three_scheme_comparison(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        write_config(cfg)
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", "--config", str(cfg), "--out", str(out)])
        assert result.exit_code == 0
        summary = json.loads((out / "summary.json").read_text())
        by_scheme = {row["scheme"]: row for row in summary}
        assert by_scheme["commfr-gc"]["mean_iteration_time"] <= by_scheme["naive"]["mean_iteration_time"]
        assert (out / "trace_commfr-gc.csv").exists()
        assert (out / "manifest.json").exists()

    def test_zero_delay_losses_coincide(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        write_config(
            cfg, straggler_model={"model": "fixed-set", "workers": [], "delay": 0.0}
        )
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", "--config", str(cfg), "--out", str(out)])
        assert result.exit_code == 0
        losses = {}
        for scheme in ("naive", "ignore-stragglers", "commfr-gc"):
            doc = json.loads((out / f"trace_{scheme}.json").read_text())
            losses[scheme] = [r["loss"] for r in doc["records"]]
        for scheme in ("ignore-stragglers", "commfr-gc"):
            for a, b in zip(losses[scheme], losses["naive"]):
                assert abs(a - b) <= 1e-6 * abs(b)

    def test_malformed_config_exit_two(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        doc = write_config(cfg)
        del doc["learning_rate"]
        cfg.write_text(json.dumps(doc))
        result = runner.invoke(main, ["simulate", "--config", str(cfg)])
        assert result.exit_code == 2
        assert "learning_rate" in result.output

    def test_invalid_json_exit_two(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        result = runner.invoke(main, ["simulate", "--config", str(cfg)])
        assert result.exit_code == 2


class TestManifest:
    def test_written_with_relative_outputs(self, runner, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(
            main, ["plan", "--n", "8", "--k", "4", "--N", "4", "--K", "2",
                   "--code", "mds", "--seed", "1", "--out", str(out)],
        )
        assert result.exit_code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "plan"
        assert manifest["seed"] == 1
        assert manifest["outputs"] == ["plan.json"]
        assert manifest["parameters"]["n"] == 8

    @pytest.mark.parametrize(
        "argv",
        [
            ["plan", "--n", "8", "--k", "4", "--N", "4", "--K", "2", "--code", "mds", "--seed", "1"],
            ["roundtrip", "--n", "8", "--k", "4", "--N", "4", "--K", "2", "--code", "mds",
             "--d", "6", "--stragglers-per-group", "2", "--seed", "9"],
            ["stability", "--rows", "60,3,2;1000,40,10"],
            ["ldpc-trial", "--N", "60", "--K", "30", "--dv", "3", "--dc", "6",
             "--p", "0.2", "--trials", "5", "--seed", "4"],
        ],
    )
    def test_rerun_reproduces_outputs_bit_identically(self, runner, tmp_path, argv):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert runner.invoke(main, argv + ["--out", str(out_a)]).exit_code == 0
        assert runner.invoke(main, argv + ["--out", str(out_b)]).exit_code == 0
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_simulate_rerun_bit_identical(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        write_config(cfg)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert runner.invoke(
                main, ["simulate", "--config", str(cfg), "--out", str(out)]
            ).exit_code == 0
        for name in sorted(p.name for p in out_a.iterdir()):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
