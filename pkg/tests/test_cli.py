import json

import pytest

from dictseg.cli import main

FAST_CFG = """\
iterations = 1500
burn_in = 300
gibbs_iterations = 800
gibbs_burn_in = 200
flip_gamma = 1
flip_r = 1
init_segments = 2
init_functions = 2
"""


@pytest.fixture
def workspace(tmp_path):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST_CFG)
    return tmp_path


class TestSimulate:
    def test_writes_series_and_truth(self, workspace, capsys):
        out = workspace / "series.csv"
        truth = workspace / "truth.json"
        code = main(["simulate", "--n", "100", "--sigma", "0.1", "--seed", "3",
                     "--out", str(out), "--truth", str(truth)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 101
        payload = json.loads(truth.read_text())
        assert payload["n"] == 100
        assert len(payload["change_points"]) == 3
        assert len(payload["f_true"]) == 100


class TestFitAndMetrics:
    def test_full_pipeline(self, workspace, capsys):
        series = workspace / "series.csv"
        truth = workspace / "truth.json"
        out_dir = workspace / "fit"
        assert main(["simulate", "--n", "100", "--sigma", "0.1", "--seed", "3",
                     "--out", str(series), "--truth", str(truth)]) == 0
        assert main(["fit", "--input", str(series), "--out-dir", str(out_dir),
                     "--mode", "sp", "--dictionary", "simulation_n100:point100",
                     "--config", str(workspace / "fast.cfg"), "--seed", "1"]) == 0
        summary = out_dir / "summary.json"
        assert summary.exists()
        assert (out_dir / "inclusion.csv").exists()
        assert (out_dir / "reconstruction.csv").exists()
        assert (out_dir / "selection.json").exists()
        report = workspace / "metrics.json"
        assert main(["metrics", "--estimate", str(summary), "--truth", str(truth),
                     "--out", str(report)]) == 0
        scores = json.loads(report.read_text())
        assert set(scores) >= {"rmse_mu", "fdr_bp", "fnr_bp"}

    def test_staged_fit(self, workspace):
        series = workspace / "series.csv"
        assert main(["simulate", "--n", "60", "--sigma", "0.1", "--seed", "4",
                     "--out", str(series)]) == 0
        stage_dir = workspace / "staged"
        assert main(["fit", "--input", str(series), "--out-dir", str(stage_dir),
                     "--mode", "p", "--config", str(workspace / "fast.cfg"),
                     "--stage", "mh", "--seed", "2"]) == 0
        selection = stage_dir / "selection.json"
        assert selection.exists()
        assert main(["fit", "--input", str(series), "--out-dir", str(stage_dir),
                     "--mode", "p", "--config", str(workspace / "fast.cfg"),
                     "--stage", "gibbs", "--selection", str(selection),
                     "--seed", "2"]) == 0
        summary = json.loads((stage_dir / "summary.json").read_text())
        assert summary["mode"] == "p"

    def test_gibbs_stage_requires_selection(self, workspace, capsys):
        series = workspace / "series.csv"
        main(["simulate", "--n", "60", "--sigma", "0.1", "--seed", "4",
              "--out", str(series)])
        code = main(["fit", "--input", str(series), "--out-dir",
                     str(workspace / "x"), "--mode", "p", "--stage", "gibbs"])
        assert code == 2
        assert "error (validation)" in capsys.readouterr().err

    def test_event_priors_flow_into_fit(self, workspace):
        series = workspace / "series.csv"
        main(["simulate", "--n", "60", "--sigma", "0.1", "--seed", "4",
              "--out", str(series)])
        events = workspace / "events.csv"
        events.write_text("12,0.5\n")
        out_dir = workspace / "events_fit"
        assert main(["fit", "--input", str(series), "--out-dir", str(out_dir),
                     "--mode", "p", "--config", str(workspace / "fast.cfg"),
                     "--event-priors", str(events), "--seed", "2"]) == 0

    def test_missing_input_is_a_data_error(self, workspace, capsys):
        code = main(["fit", "--input", str(workspace / "none.csv"),
                     "--out-dir", str(workspace / "y"), "--mode", "p"])
        assert code == 2
        assert "error (data)" in capsys.readouterr().err

    def test_determinism_byte_identical(self, workspace):
        series = workspace / "series.csv"
        main(["simulate", "--n", "60", "--sigma", "0.1", "--seed", "4",
              "--out", str(series)])
        args = ["fit", "--input", str(series), "--mode", "p",
                "--config", str(workspace / "fast.cfg"), "--seed", "11"]
        assert main(args + ["--out-dir", str(workspace / "r1")]) == 0
        assert main(args + ["--out-dir", str(workspace / "r2")]) == 0
        for name in ("summary.json", "inclusion.csv", "reconstruction.csv"):
            assert ((workspace / "r1" / name).read_bytes()
                    == (workspace / "r2" / name).read_bytes())


class TestDict:
    def test_design_matrix_export(self, workspace):
        out = workspace / "design.csv"
        assert main(["dict", "--preset", "simulation_n100", "--n", "100",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 101
        assert len(lines[0].split(",")) == 151

    def test_point_variant(self, workspace):
        out = workspace / "design.csv"
        assert main(["dict", "--preset", "simulation_n100:point100", "--n", "100",
                     "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()[0].split(",")) == 123

    def test_unknown_preset(self, workspace, capsys):
        code = main(["dict", "--preset", "wavelets", "--n", "10",
                     "--out", str(workspace / "d.csv")])
        assert code == 2
        assert "error (validation)" in capsys.readouterr().err


class TestBench:
    def test_tiny_batch(self, workspace):
        cfg = workspace / "bench.cfg"
        cfg.write_text("iterations = 800\nburn_in = 200\n"
                       "gibbs_iterations = 400\ngibbs_burn_in = 100\n")
        out_dir = workspace / "bench"
        assert main(["bench", "--sigmas", "0.1", "--replicates", "2",
                     "--methods", "sp,p", "--seed", "5", "--jobs", "1",
                     "--config", str(cfg), "--out-dir", str(out_dir)]) == 0
        rows = (out_dir / "replicates.csv").read_text().splitlines()
        assert len(rows) == 1 + 4  # header + 2 replicates x 2 methods
        summary = json.loads((out_dir / "summary.json").read_text())
        assert {s["method"] for s in summary} == {"sp", "p"}
