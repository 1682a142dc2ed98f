import json
import math

import numpy as np
import pytest

from randur import seeding
from randur.experiments import calibrate, ingest_trace, reproduce
from randur.io import read_csv_rows
from randur.model import ModelParams, sample_observations


@pytest.fixture(scope="module")
def params():
    return ModelParams.uniform(3, 0.0, 1.0, 0.6, mu0=50.0)


class TestIngest:
    def test_signal_is_detected(self, params):
        x, _ = sample_observations(params, "H1", 60, np.random.default_rng(0))
        report = ingest_trace(x, params, 0.01, n_calibration=2000, seed=1)
        assert report.first_crossing is not None and report.decision_at_end

    def test_fixed_horizon_calibration(self, params):
        alpha, T, n = 0.01, 40, 1000
        gamma = calibrate(params, T, alpha, 10_000, seed=2)
        alarms = 0
        for j in range(n):
            x, _ = sample_observations(params, "H0", T, seeding.generator(99, 0, j))
            alarms += ingest_trace(x, params, alpha, gamma=gamma).decision_at_end
        se = math.sqrt(alpha * (1 - alpha) / n)
        assert abs(alarms / n - alpha) <= 3 * se

    def test_rejects_empty(self, params):
        with pytest.raises(ValueError):
            ingest_trace([], params, 0.01, n_calibration=10)


class TestReproduce:
    def test_dishwasher_small(self, tmp_path):
        files = reproduce("fig_dishwasher", scale_factor=0.01, out_dir=tmp_path, overrides=["run.n_boot=5"])
        names = sorted(f.name for f in files)
        assert names == ["pmiss.csv", "slopes.csv", "summary.json"]
        head = read_csv_rows(tmp_path / "slopes.csv")[0]
        assert head[:8] == ["sigma", "slope", "slope_se", "slope_tail", "slope_tail_se", "t_max", "lb", "ub"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert all(r["first_t_pmiss_zero"] is not None and r["first_t_pmiss_zero"] <= 15
                   for r in summary["detection_delay"])

    def test_no_network(self, tmp_path, monkeypatch):
        import socket

        def refuse(*args, **kwargs):
            raise AssertionError("network access attempted")
        monkeypatch.setattr(socket, "socket", refuse)
        reproduce("fig1", scale_factor=0.002, out_dir=tmp_path,
                  overrides=["run.n_boot=3", "run.budget=500", "run.T=40"])
