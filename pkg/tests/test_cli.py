import json

import pytest

from mimodet.cli import EXIT_CONFIG, EXIT_OK, cli_main

BASE_CONFIG = {
    "n_t": 4, "n_r": 4, "n_subcarriers": 64, "m_order": 4,
    "rho_list": [0.0], "ebn0_db_list": [6.0],
    "max_trials": 512, "target_bit_errors": 100_000,
    "master_seed": 5,
    "detectors": [{"kind": "mmse"}, {"kind": "pso-mmse", "iters": 5, "n_pop": 10}],
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(BASE_CONFIG))
    return str(path)


class TestSimulateCommand:
    def test_runs_and_writes_csv(self, config_path, tmp_path):
        out = tmp_path / "out.csv"
        rc = cli_main(["simulate", "--config", config_path, "--out", str(out)])
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[2].split(",")[0] == "detector"
        assert len(lines) == 3 + 2  # two detectors, one point each

    def test_byte_identical_reruns(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(["simulate", "--config", config_path, "--out", str(out1)]) == EXIT_OK
        assert cli_main(["simulate", "--config", config_path, "--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_worker_invariance(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cli_main(["simulate", "--config", config_path, "--out", str(out1), "--workers", "1"])
        cli_main(["simulate", "--config", config_path, "--out", str(out2), "--workers", "2"])
        assert out1.read_bytes() == out2.read_bytes()

    def test_json_format(self, config_path, tmp_path):
        out = tmp_path / "out.json"
        rc = cli_main(["simulate", "--config", config_path, "--out", str(out),
                       "--format", "json"])
        assert rc == EXIT_OK
        payload = json.loads(out.read_text())
        assert len(payload["records"]) == 2

    def test_missing_config_fails(self, tmp_path, capsys):
        rc = cli_main(["simulate", "--config", str(tmp_path / "nope.json")])
        assert rc == EXIT_CONFIG
        assert "nope.json" in capsys.readouterr().err

    def test_invalid_config_fails(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"detectors": []}))
        assert cli_main(["simulate", "--config", str(bad)]) == EXIT_CONFIG

    def test_unknown_detector_kind_fails(self, tmp_path):
        bad = tmp_path / "bad.json"
        cfg = dict(BASE_CONFIG, detectors=[{"kind": "turbo"}])
        bad.write_text(json.dumps(cfg))
        assert cli_main(["simulate", "--config", str(bad)]) == EXIT_CONFIG

    def test_seed_override_changes_output(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cli_main(["simulate", "--config", config_path, "--out", str(out1)])
        cli_main(["simulate", "--config", config_path, "--out", str(out2),
                  "--seed", "77"])
        assert out1.read_bytes() != out2.read_bytes()


class TestComplexityCommand:
    def test_contains_reference_row(self, tmp_path, capsys):
        rc = cli_main(["complexity", "--nt-max", "8"])
        assert rc == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert "4,MF,120.0" in lines

    def test_out_file(self, tmp_path):
        out = tmp_path / "flops.csv"
        assert cli_main(["complexity", "--nt-max", "4", "--out", str(out)]) == EXIT_OK
        assert out.read_text().startswith("n_t,detector,flops")


class TestCalibrateCommand:
    def test_smoke(self, config_path, tmp_path):
        out = tmp_path / "calib.csv"
        rc = cli_main(["calibrate", "--config", config_path, "--detector", "pso",
                       "--ebn0", "6.0", "--min-errors", "5",
                       "--max-vectors", "256", "--out", str(out)])
        assert rc == EXIT_OK
        text = out.read_text()
        assert "final_params" in text
        assert text.splitlines()[0].split(",")[0] == "detector"

    def test_non_heuristic_rejected(self, config_path):
        rc = cli_main(["calibrate", "--config", config_path, "--detector", "zf"])
        assert rc == EXIT_CONFIG


class TestConvergenceCommand:
    def test_smoke_with_traces(self, config_path, tmp_path):
        out = tmp_path / "conv.csv"
        traces = tmp_path / "traces.csv"
        rc = cli_main(["convergence", "--config", config_path, "--detector",
                       "pso-mmse", "--max-iters", "3", "--ebn0", "8",
                       "--vectors", "128", "--out", str(out),
                       "--traces-out", str(traces)])
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 4  # header + iterations 0..3
        trace_header = traces.read_text().splitlines()[0]
        assert trace_header == "detector,trial,iteration,fitness"


class TestValidateChannelCommand:
    def test_passes(self, capsys):
        rc = cli_main(["validate-channel", "--samples", "20000"])
        out = capsys.readouterr().out
        assert rc == EXIT_OK
        assert "PASS" in out
        assert "FAIL" not in out


class TestArgumentErrors:
    def test_unknown_command(self):
        assert cli_main(["defragment"]) == EXIT_CONFIG

    def test_no_command(self):
        assert cli_main([]) == EXIT_CONFIG
