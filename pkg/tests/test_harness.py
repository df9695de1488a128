import json
import math

import numpy as np
import pytest

from heavybrw.harness import ExperimentConfig, run_experiment, write_outcome
from heavybrw.harness.cli import main
from heavybrw.harness.config import ConfigError
from heavybrw.harness.doa import ClusterTemplate, superpose_scaled
from heavybrw.harness.parallel import replicate
from heavybrw.harness.stats import (Comparison, ComparisonReport, ks_distance, pairwise_constancy,
                                    two_sample_chi2, zscore)

DET_IID = {"offspring": {"kind": "deterministic", "k": 2},
           "displacement": {"kind": "iid", "alpha": 1.0, "p": 1.0}}


def write_cfg(tmp_path, **kw):
    cfg = {"experiment": "validate_maxima", "seed": 3, "reps": 200, "n": 6, "model": DET_IID}
    cfg.update(kw)
    cfg = {k: v for k, v in cfg.items() if v is not None}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


class TestConfig:
    def test_missing_seed(self):
        with pytest.raises(ConfigError, match="'seed'"):
            ExperimentConfig.from_dict({"experiment": "validate_maxima", "model": DET_IID})

    def test_too_few_reps(self):
        with pytest.raises(ConfigError, match="reps"):
            ExperimentConfig.from_dict({"experiment": "validate_maxima", "seed": 1, "reps": 50, "model": DET_IID})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "nope", "seed": 1})

    def test_b2_positive(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "validate_stability", "seed": 1, "b2": 0.0, "model": DET_IID})

    def test_bad_model(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "validate_maxima", "seed": 1,
                                        "model": {"offspring": {"kind": "poisson", "m": 0.5},
                                                  "displacement": DET_IID["displacement"]}})

    def test_override(self):
        cfg = ExperimentConfig.from_dict({"experiment": "validate_maxima", "seed": 1, "model": DET_IID})
        assert cfg.override(seed=9, reps=None).seed == 9


class TestCli:
    def test_missing_seed_exit_2(self, tmp_path, capsys):
        path = write_cfg(tmp_path, seed=None)
        assert main(["run", str(path)]) == 2
        assert "seed" in capsys.readouterr().err

    def test_unreadable_exit_2(self, tmp_path):
        assert main(["run", str(tmp_path / "missing.json")]) == 2

    def test_bad_json_exit_2(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        assert main(["run", str(p)]) == 2

    def test_pass_exit_0(self, tmp_path):
        path = write_cfg(tmp_path, x_grid=[1e9])
        assert main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["schema_version"] == 1 and report["pass"] is True

    def test_failure_exit_1(self, tmp_path):
        # a zero tolerance cannot be met by a Monte Carlo estimate
        path = write_cfg(tmp_path, z_tol=0.0)
        assert main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == 1

    def test_kappa_and_sample(self, tmp_path):
        path = write_cfg(tmp_path)
        assert main(["kappa", str(path), "--out-dir", str(tmp_path / "k")]) == 0
        info = json.loads((tmp_path / "k" / "report.json").read_text())["info"]
        assert info["closed_form_iid"]["value"] == pytest.approx(2.0)
        assert main(["sample", str(path), "--out-dir", str(tmp_path / "s"), "--dump-points", "2"]) == 0
        assert (tmp_path / "s" / "points_1.csv").read_text().startswith("location,multiplicity")

    def test_cdf_columns(self, tmp_path):
        path = write_cfg(tmp_path)
        main(["run", str(path), "--out-dir", str(tmp_path / "o")])
        head = (tmp_path / "o" / "cdf.csv").read_text().splitlines()[0]
        assert head == "x,empirical,se,oracle,z"


class TestDeterminism:
    @pytest.mark.parametrize("experiment", ["validate_maxima", "validate_laplace"])
    def test_repeat_byte_identical(self, tmp_path, experiment):
        path = write_cfg(tmp_path, experiment=experiment)
        outs = []
        for k in range(2):
            out = tmp_path / f"o{k}"
            main(["run", str(path), "--out-dir", str(out)])
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outs[0] == outs[1]

    def test_thread_count_irrelevant(self, tmp_path):
        path = write_cfg(tmp_path, reps=128)
        outs = []
        for threads in ("1", "2"):
            out = tmp_path / f"t{threads}"
            main(["run", str(path), "--out-dir", str(out), "--threads", threads])
            outs.append((out / "cdf.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_replicate_order(self):
        a = replicate(lambda r: r.random(), 70, seed=4)
        b = replicate(lambda r: r.random(), 70, seed=4)
        assert a == b and len(set(a)) == 70


class TestStats:
    def test_zscore(self):
        assert zscore(1.0, 0.3, 0.6, 0.4) == pytest.approx(0.8)
        assert zscore(1.0, 0.0, 1.0) == 0.0

    def test_report_pass_logic(self):
        rep = ComparisonReport("x", "s", [Comparison("a", 1.0, 0.5, 0.1, 0.45)], 3.0)
        assert rep.passed
        rep.checks["other"] = {"value": 0.0, "pass": False}
        assert not rep.passed

    def test_chi2_same_law(self, rng):
        a, b = rng.poisson(2.0, 5000), rng.poisson(2.0, 5000)
        assert two_sample_chi2(a, b)[2] > 1e-3
        assert two_sample_chi2(a, rng.poisson(2.3, 5000))[2] < 1e-3

    def test_chi2_constant(self):
        assert two_sample_chi2(np.zeros(10, int), np.zeros(10, int)) == (0.0, 0, 1.0)

    def test_ks(self, rng):
        x = rng.random(2000)
        assert ks_distance(x, lambda t: np.clip(t, 0, 1)) < 0.05

    def test_pairwise(self):
        assert pairwise_constancy([1.0, 1.1], [0.1, 0.1])[0]
        assert not pairwise_constancy([1.0, 2.0], [0.1, 0.1])[0]


class TestSuperposition:
    def test_thinning_matches_brute_force(self):
        t = ClusterTemplate((1.0, 0.5), 1.0, 0.7)
        n, x = 500, 1.0
        reps = 4000
        thin = [superpose_scaled(t, n, np.random.default_rng(i), floor=0.5).count_exceedances(x)
                for i in range(reps)]
        full = [superpose_scaled(t, n, np.random.default_rng(10_000 + i)).count_exceedances(x)
                for i in range(reps)]
        for side in (0, 1):
            a = np.array([c[side] for c in thin])
            b = np.array([c[side] for c in full])
            assert two_sample_chi2(a, b)[2] > 1e-3

    def test_floor_respected(self, rng):
        m = superpose_scaled(ClusterTemplate((1.0, 0.5)), 1000, rng, floor=0.3)
        assert np.all(np.abs(m.locations) >= 0.3)

    def test_mean_counts(self):
        t = ClusterTemplate((1.0, 0.5))
        assert t.limit_mean_exceedance(2.0) == pytest.approx(0.75)
        assert ClusterTemplate((1.0,)).limit_mean_exceedance(1.0) == 1.0

    def test_single_atom_poisson(self):
        t = ClusterTemplate((1.0,))
        c = np.array([superpose_scaled(t, 10_000, np.random.default_rng(i), 1.0).count_exceedances(1.0)[0]
                      for i in range(10_000)])
        assert abs(c.mean() - 1.0) < 3 * c.std(ddof=1) / math.sqrt(c.size)

    def test_far_support_laplace_is_one(self):
        from heavybrw.pointproc import TestFunction
        t = ClusterTemplate((1.0, 0.5))
        f = TestFunction(1e8, 1.0, 1.0)
        assert t.limit_laplace(f, f.a, (f.a, f.a + 1)) == pytest.approx(1.0, abs=1e-7)
        m = superpose_scaled(t, 100, np.random.default_rng(0), 1.0)
        assert math.exp(-m.integrate(f)) == 1.0


class TestExperimentsSmoke:
    def test_stability_scale(self, tmp_path):
        cfg = ExperimentConfig.from_dict({"experiment": "validate_stability", "seed": 1, "reps": 200,
                                          "model": {**DET_IID, "displacement": {"kind": "iid", "alpha": 2.0}}})
        out = run_experiment(cfg)
        assert out.report.info["b"] == pytest.approx(math.sqrt(2))
        write_outcome(out, cfg, tmp_path)
        assert (tmp_path / "laplace.csv").read_text().startswith("f_id,y,empirical,se,oracle,z")

    def test_stability_scale_alpha1(self):
        cfg = ExperimentConfig.from_dict({"experiment": "validate_stability", "seed": 1, "reps": 100,
                                          "model": DET_IID})
        assert run_experiment(cfg).report.info["b"] == 2.0

    def test_big_jump_small(self):
        cfg = ExperimentConfig.from_dict({"experiment": "big_jump", "seed": 1, "reps": 100, "n_grid": [1, 2],
                                          "eps": 0.25, "model": DET_IID})
        rep = run_experiment(cfg).report
        assert rep.info["fraction"][0] == 0.0
