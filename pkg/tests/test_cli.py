import json

import numpy as np
import pytest

from randur import cli
from randur.io import read_csv_rows

MODEL = ["--set", "model.delta=2", "--set", "model.mu1=0", "--set", "model.mu2=1",
         "--set", "model.sigma=0.5", "--set", "run.T=12", "--set", "run.J=3000"]


def run(tmp_path, *args):
    return cli.main(list(args) + ["--out", str(tmp_path)])


def rows(path):
    return read_csv_rows(path)


class TestCommands:
    def test_combinatorics(self, tmp_path):
        assert run(tmp_path, "combinatorics", "--delta", "2", "--t-max", "6") == 0
        data = rows(tmp_path / "counts.csv")
        assert data[0] == ["t", "C_t", "log_C_t"]
        assert [r[1] for r in data[1:]] == ["1", "2", "3", "5", "8", "13"]

    def test_simulate_and_lrt(self, tmp_path):
        assert run(tmp_path, "simulate", *MODEL) == 0
        trace = tmp_path / "trace.csv"
        assert rows(trace)[0] == ["t", "x", "state"]
        assert run(tmp_path, "lrt-run", *MODEL, "--input", str(trace), "--oracle") == 0
        data = rows(tmp_path / "lrt.csv")
        assert data[0] == ["t", "log_lrt", "oracle_log_lrt"]
        for _, v, ref in data[1:]:
            assert abs(float(v) - float(ref)) < 1e-9

    def test_paper_init_mode_runs(self, tmp_path):
        assert run(tmp_path, "lrt-run", *MODEL, "--init-mode", "paper") == 0

    def test_monte_carlo_commands(self, tmp_path):
        assert run(tmp_path, "roc", *MODEL, "-t", "5", "--set", "run.scale=0.1") == 0
        assert rows(tmp_path / "roc.csv")[0] == ["t", "gamma_log", "p_fa", "p_miss"]
        assert run(tmp_path, "pmiss", *MODEL) == 0
        assert rows(tmp_path / "pmiss.csv")[0] == ["t", "p_miss", "gamma_star_log"]
        assert run(tmp_path, "slope", *MODEL, "--set", "run.n_boot=5") == 0
        slope = json.loads((tmp_path / "slope.json").read_text())
        assert {"slope", "intercept", "window", "t_max"} <= set(slope)
        assert run(tmp_path, "exponent", *MODEL, "--horizons", "5,10") == 0
        assert rows(tmp_path / "exponent.csv")[0] == ["T", "zeta_hat", "std_error"]

    def test_bound_and_detectability(self, tmp_path):
        assert run(tmp_path, "bound", *MODEL, "--set", "run.budget=2000") == 0
        bound = json.loads((tmp_path / "bound.json").read_text())
        assert bound["eta_lower"] == 0.0 and bound["mode"] == "paper-faithful"
        assert rows(tmp_path / "bound_trace.csv")[0] == ["samples", "best_value"]
        assert run(tmp_path, "detectability", *MODEL) == 0
        det = json.loads((tmp_path / "detectability.json").read_text())
        assert det["undetectable"] is True and abs(det["sigma_star"] - 0.4247) < 1e-4

    def test_ingest(self, tmp_path):
        assert run(tmp_path, "simulate", *MODEL, "--set", "run.T=30") == 0
        assert run(tmp_path, "ingest", *MODEL, "--input", str(tmp_path / "trace.csv")) == 0
        report = json.loads((tmp_path / "ingest.json").read_text())
        assert report["first_crossing"] is not None


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        assert run(tmp_path, "pmiss") == 2
        assert "missing required keys" in capsys.readouterr().err

    def test_model_error(self, tmp_path):
        assert run(tmp_path, "detectability", *MODEL, "--set", "model.mu1=0.5") == 2

    def test_empty_trace(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert run(tmp_path, "ingest", *MODEL, "--input", str(empty)) == 2

    def test_numeric_guard(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "ORACLE_TOL", -1.0)
        assert run(tmp_path, "lrt-run", *MODEL, "--oracle") == 3

    def test_reproduce_needs_preset(self, tmp_path):
        assert run(tmp_path, "reproduce", *MODEL) == 2
