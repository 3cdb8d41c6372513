import json

import pytest

from gridmm.cli import main


@pytest.fixture
def g_config(tmp_path):
    cfg = {
        "arch": {"d0_i": 8, "d0_j": 8, "d0_k": 2, "d_p": 2},
        "clock": {"fmax_mhz": 368},
        "memory": {"bank_mb_s": 19200, "efficiency": 1.0},
        "blocking": {"d1_i": 32, "d1_j": 32},
        "problem": {"d2_i": 32, "d2_j": 32, "d2_k": 128},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestEstimate:
    def test_table_output(self, g_config, capsys):
        assert main(["estimate", g_config]) == 0
        out = capsys.readouterr().out
        assert "n_dsp" in out and "c_percent" in out and "t_pred_gflops" in out

    def test_csv_output(self, g_config, capsys):
        assert main(["estimate", g_config, "--format", "csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "quantity,value"

    def test_missing_config(self, capsys):
        assert main(["estimate", "/nonexistent.json"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_fmax(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"arch": {"d0_i": 2, "d0_j": 2, "d0_k": 2},
                                    "clock": {"fmax_mhz": 700}}))
        assert main(["estimate", str(path)]) == 2

    def test_infeasible_blocking(self, tmp_path, capsys):
        # r=1 on this grid would need 128 floats/cycle, beyond any tier
        cfg = {
            "arch": {"d0_i": 64, "d0_j": 32, "d0_k": 2, "d_p": 2},
            "clock": {"fmax_mhz": 398},
            "blocking": {"d1_i": 64, "d1_j": 32},
            "problem": {"d2_i": 64, "d2_j": 32, "d2_k": 64},
        }
        path = tmp_path / "infeasible.json"
        path.write_text(json.dumps(cfg))
        assert main(["estimate", str(path)]) == 1
        assert "infeasible" in capsys.readouterr().err


class TestSimulate:
    def test_run_and_exit_code(self, g_config, capsys):
        assert main(["simulate", g_config, "--seed", "2"]) == 0
        out = capsys.readouterr().out
        assert "matches_oracle=True" in out
        assert "result_sha256=" in out

    def test_functional_fidelity_same_hash(self, g_config, capsys):
        main(["simulate", g_config, "--seed", "2"])
        blocked_out = capsys.readouterr().out
        main(["simulate", g_config, "--seed", "2", "--fidelity", "functional"])
        functional_out = capsys.readouterr().out
        digest = [l for l in blocked_out.splitlines() if l.startswith("result_sha256")]
        assert digest[0] in functional_out

    def test_float_values(self, g_config, capsys):
        assert main(["simulate", g_config, "--values", "floats"]) == 0
        assert "matches_oracle=True" in capsys.readouterr().out

    def test_save_result(self, g_config, tmp_path, capsys):
        out_path = tmp_path / "c.bin"
        assert main(["simulate", g_config, "--save-result", str(out_path)]) == 0
        assert "result_written=" in capsys.readouterr().out
        from gridmm import load_binary
        m = load_binary(out_path)
        assert (m.rows, m.cols) == (32, 32)


class TestDse:
    def test_basic_table(self, capsys):
        assert main(["dse", "--budget", "4713", "--d0i", "28,72", "--d0j", "28,32",
                     "--d0k", "2,3,6", "--dp", "1-3", "--fmax", "368",
                     "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert "28,28,6,1,4704,4704,True" in out
        assert "6912" not in out  # 72x32x3 exceeds the budget

    def test_deterministic_csv(self, capsys):
        argv = ["dse", "--budget", "512", "--d0i", "4,8", "--d0j", "4,8",
                "--d0k", "2,4", "--dp", "1,2", "--format", "csv", "--d2", "256"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second
        header = first.splitlines()[0].split(",")
        assert "c_percent" in header and "n_dsp" in header


class TestCompare:
    def test_all_designs_exit_zero(self, capsys):
        assert main(["compare"]) == 0
        out = capsys.readouterr().out
        assert "0 failed" in out
        assert "flagged" in out

    def test_csv_format(self, capsys):
        assert main(["compare", "--designs", "G", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("design,d2_i")
        assert len([l for l in lines if l.startswith("G,")]) == 6

    def test_custom_refs_file(self, tmp_path, capsys):
        refs = {
            "version": 1,
            "designs": [{
                "id": "X", "d0_i": 8, "d0_j": 8, "d0_k": 2, "d_p": 1,
                "n_dsp": 128, "n_pe": 128, "fitter_failed": False,
                "fmax_mhz": 368, "t_peak_gflops": 94.2,
                "d1_i": 64, "d1_j": 64,
                "points": [{"d2_i": 256, "d2_j": 256, "d2_k": 256,
                            "t_flops_gflops": 87.0, "e_d": 0.92}],
            }],
        }
        path = tmp_path / "refs.json"
        path.write_text(json.dumps(refs))
        assert main(["compare", "--refs", str(path)]) == 0

    def test_failing_reference_sets_exit_code(self, tmp_path, capsys):
        refs = {
            "version": 1,
            "designs": [{
                "id": "X", "d0_i": 8, "d0_j": 8, "d0_k": 2, "d_p": 1,
                "n_dsp": 128, "n_pe": 128, "fitter_failed": False,
                "fmax_mhz": 368, "t_peak_gflops": 94.2,
                "d1_i": 64, "d1_j": 64,
                "points": [{"d2_i": 256, "d2_j": 256, "d2_k": 256,
                            "t_flops_gflops": 30.0, "e_d": 0.32}],
            }],
        }
        path = tmp_path / "refs.json"
        path.write_text(json.dumps(refs))
        assert main(["compare", "--refs", str(path)]) == 1
