import json

import numpy as np
import pytest

from randur.config import PRESETS, parse_config, read_config_file
from randur.errors import ConfigError
from randur.io import metadata, read_csv_rows, read_trace, write_csv, write_json

BASE = ["model.delta=2", "model.mu1=0", "model.mu2=1", "model.sigma=0.5"]


class TestPresets:
    def test_fig1(self):
        cfg = parse_config(preset="fig1")
        p = cfg.params
        assert (p.delta, p.mu1, p.mu2, p.sigma, cfg.alpha, cfg.T) == (3, 2.0, 5.0, 10.0, 0.01, 300)
        np.testing.assert_allclose(p.p1.probs, [1 / 3] * 3)
        assert cfg.n_runs == 10_000

    def test_mu1zero(self):
        cfg = parse_config(preset="fig_mu1zero")
        assert (cfg.params.delta, cfg.params.mu1, cfg.params.mu2) == (2, 0.0, 1.0)
        assert min(cfg.sigma_grid) == 0.2 and max(cfg.sigma_grid) == 0.6

    def test_dishwasher_levels(self):
        p = parse_config(preset="fig_dishwasher").params
        assert (p.delta, p.mu1, p.mu2, p.mu0) == (10, 66.0, 2200.0, 90.0)

    def test_all_presets_resolve(self):
        for name in PRESETS:
            assert parse_config(preset=name).preset == name

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            parse_config(preset="fig9")


class TestLayering:
    def test_empty_lists_required_keys(self):
        with pytest.raises(ConfigError) as err:
            parse_config()
        for key in ("model.delta", "model.mu1", "model.mu2", "model.sigma"):
            assert key in str(err.value)

    def test_order(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# comment\nrun.preset = fig1\nmodel.sigma = 12  # trailing\nrun.T = 50\n")
        cfg = parse_config(f, ["run.T=60"])
        assert cfg.params.mu2 == 5.0      # preset
        assert cfg.params.sigma == 12.0   # file beats preset
        assert cfg.T == 60                # flag beats file
        assert cfg.J == 100_000           # default

    def test_unknown_key_names_line(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("model.delta = 2\n\nmodel.sigmaa = 1\n")
        with pytest.raises(ConfigError, match=r"bad.cfg:3: unknown key 'model.sigmaa'"):
            read_config_file(f)

    def test_bad_value_names_key(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("model.delta = two\n")
        with pytest.raises(ConfigError, match=r"bad.cfg:1: bad value 'two' for model.delta"):
            parse_config(f, BASE[1:])

    @pytest.mark.parametrize("flag,needle", [("run.alpha=1.5", "run.alpha"), ("run.T=0", "run.T"),
                                             ("run.window=2", "run.window"),
                                             ("model.sigma=-1", "sigma")])
    def test_invariants(self, flag, needle):
        with pytest.raises(ConfigError, match=needle):
            parse_config(None, BASE + [flag])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "nope.cfg")

    def test_pmf_values(self):
        cfg = parse_config(None, BASE + ["model.p1=0.25,0.75"])
        np.testing.assert_allclose(cfg.params.p1.probs, [0.25, 0.75])
        with pytest.raises(ConfigError, match="model.p1"):
            parse_config(None, BASE + ["model.p1=0.5,0.6"])

    def test_hash(self):
        a = parse_config(None, BASE + ["run.threads=1"])
        b = parse_config(None, BASE + ["run.threads=8", "output.dir=elsewhere"])
        c = parse_config(None, BASE + ["run.seed=3"])
        assert a.hash() == b.hash() != c.hash()


class TestOutput:
    def test_csv_round_trip(self, tmp_path):
        cfg = parse_config(None, BASE)
        path = write_csv(tmp_path / "a.csv", ["t", "v", "flag"], [[1, 0.1, True], [2, float("nan"), None]],
                         metadata(cfg))
        first = path.read_text().splitlines()[0]
        assert first.startswith("# ")
        meta = json.loads(first[2:])
        assert meta["config_hash"] == cfg.hash() and meta["seed"] == 0 and meta["version"]
        assert read_csv_rows(path) == [["t", "v", "flag"], ["1", "0.1", "1"], ["2", "nan", ""]]

    def test_float_repr_round_trips(self, tmp_path):
        x = np.random.default_rng(0).normal(size=50)
        write_csv(tmp_path / "x.csv", ["x"], ([v] for v in x))
        back = np.array([float(r[0]) for r in read_csv_rows(tmp_path / "x.csv")[1:]])
        assert np.array_equal(back, x)

    def test_json(self, tmp_path):
        path = write_json(tmp_path / "s.json", {"a": np.float64(1.5), "b": float("inf")}, {"seed": 1})
        data = json.loads(path.read_text())
        assert data["a"] == 1.5 and data["b"] == "inf" and data["metadata"]["seed"] == 1


class TestTrace:
    def test_read(self, tmp_path):
        f = tmp_path / "trace.csv"
        f.write_text("# note\nt,x\n2,0.5\n1,-1.25\n")
        np.testing.assert_array_equal(read_trace(f), [-1.25, 0.5])

    @pytest.mark.parametrize("body,needle", [
        ("", "no observations"),
        ("t,x\n", "no observations"),
        ("time,value\n1,2\n", "header"),
        ("t,x\n1,0.5\n2,abc\n", ":3: malformed row"),
        ("t,x\n1\n", ":2: expected two columns"),
        ("t,x\n1,1\n1,2\n", "duplicate"),
        ("t,x\n1,inf\n", "non-finite"),
    ])
    def test_errors(self, tmp_path, body, needle):
        f = tmp_path / "trace.csv"
        f.write_text(body)
        with pytest.raises(ConfigError, match=needle):
            read_trace(f)
