import json

from smcbench.cli import main


def base_args(tmp_path, *extra):
    return [
        "sweep", "--peers", "3", "--latency-ms", "0", "--rate-mbit", "1000",
        "--loss", "0", "--pf", "1", "--sessions", "20", "--reps", "1",
        "--seed", "3", "--out", str(tmp_path / "out.csv"), *extra,
    ]


class TestSweepCommand:
    def test_successful_sweep_exits_zero(self, tmp_path, capsys):
        assert main(base_args(tmp_path)) == 0
        out = capsys.readouterr().out
        assert "repetition rows written" in out
        assert (tmp_path / "out.csv").exists()

    def test_bad_configuration_exits_two(self, tmp_path, capsys):
        code = main(base_args(tmp_path, "--mode", "simulate", "--pf", "50"))
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_report_flag_writes_json(self, tmp_path):
        report_path = tmp_path / "report.json"
        args = base_args(tmp_path, "--latency-ms", "0", "16", "--report", str(report_path))
        assert main(args) == 0
        report = json.load(open(report_path))
        assert "duration_ms_vs_latency_ms" in report["fits"]

    def test_config_file_with_flag_override(self, tmp_path):
        config = {
            "peers": [3],
            "latency_ms": [0.0],
            "rate_mbit": [1000.0],
            "loss": [0.0],
            "pf": [1],
            "sessions": 10,
            "repetitions": 2,
            "out_csv": str(tmp_path / "from_config.csv"),
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        # --reps overrides the file's repetitions
        assert main(["sweep", "--config", str(path), "--reps", "1"]) == 0
        rows = open(tmp_path / "from_config.csv").read().strip().splitlines()
        assert len(rows) == 1 + 1  # header + one repetition

    def test_unknown_config_keys_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"bandwidth": [1]}))
        assert main(["sweep", "--config", str(path)]) == 2

    def test_unusable_trace_directory_exits_two(self, tmp_path, capsys):
        empty = tmp_path / "no_traces"
        empty.mkdir()
        code = main(base_args(tmp_path, "--traces", str(empty)))
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_small_modulus_exits_two(self, tmp_path, capsys):
        code = main(base_args(tmp_path, "--modulus", "2147483647"))
        assert code == 2

    def test_plan_file_as_protocol(self, tmp_path, capsys):
        plan = tmp_path / "plan.txt"
        plan.write_text("close\nadd\nopen\n")
        assert main(base_args(tmp_path, "--protocol", str(plan))) == 0

    def test_reference_axes_listing(self, capsys):
        assert main(["sweep", "--reference-axes"]) == 0
        axes = json.loads(capsys.readouterr().out)
        assert axes["pf"] == [1, 5, 10, 20, 50, 100, 200, 500, 1000]
        assert axes["latency_ms"] == [0.0, 16.0, 50.0, 200.0, 500.0]


class TestReportCommand:
    def test_report_over_existing_csv(self, tmp_path, capsys):
        assert main(base_args(tmp_path, "--peers", "3", "--latency-ms", "0", "16")) == 0
        capsys.readouterr()
        out_json = tmp_path / "fit.json"
        code = main(["report", str(tmp_path / "out.csv"), "--out", str(out_json)])
        assert code == 0
        assert "duration_ms_vs_latency_ms" in capsys.readouterr().out
        assert out_json.exists()


class TestKernelBenchCommand:
    def test_kernel_bench_prints_table(self, capsys):
        assert main(["kernel-bench", "--peers", "5", "--iterations", "50"]) == 0
        out = capsys.readouterr().out
        assert "share ms/op" in out
        assert "active backend" in out
