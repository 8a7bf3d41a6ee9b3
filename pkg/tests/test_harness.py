import json
import math
import xml.etree.ElementTree as ET

import mpmath
import numpy as np
import pytest

from bayescap.harness import (ExperimentConfig, ExperimentRecord, epsilon_to_kappa, epsilon_to_sigma,
                              load_config, run_sweep)
from bayescap.report import CSV_HEADER, emit_csv, emit_scatter_svg, read_csv

FAST_ATTACK = {"iterations": 40, "restarts": 1}
SVG = "{http://www.w3.org/2000/svg}"


def small_config(tmp_path, **kw):
    base = dict(mechanisms=("gaussian",), sigmas=(0.5,), seeds=(0,), attack=FAST_ATTACK,
                dataset={"source": "synthetic", "n": 10, "resolution": 8, "seed": 0},
                output_dir=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


class TestCalibration:
    def test_sigma_examples(self):
        mpmath.mp.dps = 30
        ref = float(mpmath.sqrt(2 * mpmath.log(mpmath.mpf("1.25") / mpmath.mpf("1e-5"))))
        assert epsilon_to_sigma(1, 1e-5, 1) == pytest.approx(ref, rel=1e-14)
        assert epsilon_to_sigma(1, 1e-5, 1) == pytest.approx(4.84481, abs=1e-5)
        assert epsilon_to_sigma(2, 1e-5, 1) == pytest.approx(2.42240, abs=1e-5)
        assert epsilon_to_sigma(1, 1e-5, 2 * 1 / 4) == pytest.approx(0.5 * epsilon_to_sigma(1, 1e-5, 1))

    def test_kappa_examples(self):
        assert epsilon_to_kappa(173) == 173
        assert epsilon_to_kappa(1) == 1
        assert epsilon_to_kappa(0.5) == 0.5

    @pytest.mark.parametrize("args", [(0, 1e-5, 1), (1, 0, 1), (1, 1, 1), (1, 1e-5, 0)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            epsilon_to_sigma(*args)
        with pytest.raises(ValueError):
            epsilon_to_kappa(0)


class TestConfig:
    def test_default_grid(self):
        grid = ExperimentConfig().grid()
        assert len(grid) == 10
        gauss = [g for g in grid if g[0] == "gaussian"]
        assert gauss[0][2] == pytest.approx(2 * 4.84481, abs=1e-4)
        assert [g[2] for g in grid if g[0] == "vmf"] == [1, 5, 10, 50, 173]

    def test_invalid(self):
        with pytest.raises(ValueError):
            ExperimentConfig(seeds=())
        with pytest.raises(ValueError):
            ExperimentConfig(delta=1.0)
        with pytest.raises(ValueError):
            ExperimentConfig(mechanisms=("laplace",))
        with pytest.raises(ValueError):
            ExperimentConfig(epsilons=None)

    def test_load_config(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"mechanisms": ["vmf"], "kappas": [2, 3], "seeds": [1]}))
        cfg = load_config(f)
        assert cfg.grid() == [("vmf", cfg.grid()[0][1], 2.0), ("vmf", cfg.grid()[1][1], 3.0)]
        f.write_text(json.dumps({"mechanism": ["vmf"]}))
        with pytest.raises(ValueError, match="unknown config keys"):
            load_config(f)

    def test_per_layer_radius(self):
        assert ExperimentConfig(radius_mode="per-layer").capacity_radius == 2.0
        assert ExperimentConfig().capacity_radius == 1.0


class TestReport:
    RECORDS = [ExperimentRecord("gaussian", 1.0, 9.68962, 3.5912345678901234, 0.41, 0.06, 10),
               ExperimentRecord("vmf", 173.0, 173.0, 160.76, 0.3129, 0.07, 10)]

    def test_csv_round_trip(self, tmp_path):
        f = tmp_path / "r.csv"
        emit_csv(self.RECORDS, f)
        lines = f.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert all(len(line.split(",")) == 7 for line in lines)
        assert read_csv(f) == self.RECORDS

    def test_empty_csv(self, tmp_path):
        emit_csv([], tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == ",".join(CSV_HEADER) + "\n"

    def test_svg_one_marker(self, tmp_path):
        emit_scatter_svg(self.RECORDS[:1], "epsilon", tmp_path / "a.svg")
        root = ET.parse(tmp_path / "a.svg").getroot()
        assert len(root.findall(f"{SVG}circle")) == 1
        assert root.find(f"{SVG}g[@class='legend']") is None

    def test_svg_two_mechanisms(self, tmp_path):
        emit_scatter_svg(self.RECORDS, "log_capacity", tmp_path / "b.svg")
        root = ET.parse(tmp_path / "b.svg").getroot()
        legend = root.find(f"{SVG}g[@class='legend']")
        assert legend is not None and len(legend.findall(f"{SVG}text")) == 2
        assert len(root.findall(f"{SVG}circle")) == 1 and len(root.findall(f"{SVG}rect")) == 2  # + background
        texts = [t.text for t in root.iter(f"{SVG}text")]
        assert "log Bayes' capacity (nats)" in texts

    def test_svg_errors(self, tmp_path):
        with pytest.raises(ValueError):
            emit_scatter_svg([], "epsilon", tmp_path / "c.svg")
        with pytest.raises(ValueError):
            emit_scatter_svg(self.RECORDS, "sigma", tmp_path / "c.svg")


class TestSweep:
    def test_single_point(self, tmp_path):
        cfg = small_config(tmp_path)
        (rec,) = run_sweep(cfg)
        assert rec.n_seeds == 1 and not rec.failed
        assert rec.mse_std == 0 and rec.mse_mean >= 0 and rec.log_bayes_capacity >= 0
        out = tmp_path / "out"
        assert {p.name for p in out.iterdir()} == {"records.csv", "fig-epsilon.svg", "fig-capacity.svg",
                                                    "config.json"}
        (row,) = read_csv(out / "records.csv")
        assert math.isnan(row.epsilon)          # direct sigma grid carries no epsilon
        assert (row.mse_mean, row.log_bayes_capacity, row.n_seeds) == (rec.mse_mean, rec.log_bayes_capacity, 1)

    def test_capacity_descends_with_sigma(self, tmp_path):
        cfg = small_config(tmp_path, sigmas=(0.5, 1.0, 2.0, 4.0), attack={"iterations": 2, "restarts": 1})
        recs = sorted(run_sweep(cfg, write=False), key=lambda r: r.sigma_or_kappa)
        caps = [r.log_bayes_capacity for r in recs]
        assert all(a > b for a, b in zip(caps, caps[1:]))

    def test_failed_point_is_recorded(self, tmp_path):
        cfg = small_config(tmp_path, dataset={"source": "idx", "images": str(tmp_path / "missing"),
                                              "labels": str(tmp_path / "missing")})
        (rec,) = run_sweep(cfg)
        assert rec.failed and math.isnan(rec.mse_mean)
        assert (tmp_path / "out" / "records.csv").read_text().splitlines()[1].endswith(",0")

    def test_deterministic_and_worker_independent(self, tmp_path, monkeypatch):
        kw = dict(mechanisms=("gaussian", "vmf"), sigmas=(0.5, 2.0), kappas=(5.0, 50.0), seeds=(0, 1))
        run_sweep(small_config(tmp_path / "a", **kw))
        run_sweep(small_config(tmp_path / "b", **kw))
        monkeypatch.setenv("BAYESCAP_WORKERS", "2")
        run_sweep(small_config(tmp_path / "c", **kw))
        a, b, c = ((tmp_path / d / "out" / "records.csv").read_bytes() for d in "abc")
        assert a == b == c
        mechs = [r.mechanism for r in read_csv(tmp_path / "a" / "out" / "records.csv")]
        assert mechs == ["gaussian", "gaussian", "vmf", "vmf"]
