import json

import numpy as np
import pytest

from levyreduction.errors import ConfigInvalid
from levyreduction.harness.checks import (
    born_test, cantelli_test, ensemble_checks, martingale_test, mean_density_test, supermartingale_test,
    variance_decay_bound,
)
from levyreduction.harness.config import PRESETS, ScenarioConfig, parse_quantity, preset
from levyreduction.harness.ensemble import CHUNK_SIZE, KahanSum, path_rng, run_ensemble
from levyreduction.harness.output import aggregate_records, read_csv, write_ensemble
from levyreduction.levy_noise import Poisson


def small(kind="brownian", **kw):
    noise = {"brownian": {"kind": "brownian", "drift": 0.0, "diffusion": 1.0},
             "poisson": {"kind": "poisson", "intensity": 1.0},
             "gamma": {"kind": "gamma", "rate": 1.0, "scale": 1.0}}[kind]
    base = dict(energies=[0.0, 0.5], amplitudes=[np.sqrt(0.3), np.sqrt(0.7)], noise=noise,
                horizon_factor=20.0, steps=40, paths=600, seed=3)
    base.update(kw)
    return ScenarioConfig.from_dict(base)


class TestQuantities:
    @pytest.mark.parametrize("text,kind,value", [
        ("3.801e-5eV", "energy", 3.801e-5), ("2 meV", "energy", 2e-3), ("1s", "time", 1.0),
        ("5ms", "time", 5e-3), ("2kHz", "rate", 2e3), ("2e4/eV", "inverse_energy", 2e4),
        ("1/MeV", "inverse_energy", 1e-6), (2.5, None, 2.5), ("7", None, 7.0),
    ])
    def test_parse(self, text, kind, value):
        assert parse_quantity(text, kind) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize("text,kind", [("1eV", "time"), ("abc", None), ("1 parsec", None), (True, None)])
    def test_reject(self, text, kind):
        with pytest.raises(ConfigInvalid):
            parse_quantity(text, kind)


class TestConfig:
    def test_presets_validate(self):
        for name in PRESETS:
            cfg = preset(name).validate()
            assert cfg.grid()[0] == 0.0 and cfg.grid().size == cfg.steps + 1

    def test_named_scenarios_present(self):
        assert {"appendix-a", "appendix-b", "appendix-c", "custom"} <= set(PRESETS)

    def test_unknown_preset(self):
        with pytest.raises(ConfigInvalid):
            preset("appendix-z")

    def test_unknown_key(self):
        with pytest.raises(ConfigInvalid):
            ScenarioConfig.from_dict({"energies": [0, 1], "amplitudes": [1, 0], "colour": "red"})

    @pytest.mark.parametrize("bad", [
        {"energies": [0, 1], "hamiltonian": [[0, 0], [0, 1]], "amplitudes": [1, 0]},
        {"energies": [0, 1], "amplitudes": [1, 0, 0]},
        {"energies": [0, 5], "amplitudes": [0.6, 0.8], "noise": {"kind": "gamma", "rate": 1, "scale": 1}},
        {"energies": [0, 1], "amplitudes": [1, 0], "delta": 0.7},
        {"energies": [0, 1], "amplitudes": [1, 0], "paths": 0},
        {"energies": [0, 1], "amplitudes": [1, 1], "sigma": 2.0, "coupling": 1.0},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigInvalid):
            ScenarioConfig.from_dict(bad).validate()

    def test_auto_horizon(self):
        cfg = preset("appendix-a")
        assert cfg.resolved_horizon() == pytest.approx(20.0 / 0.125)

    def test_units_and_roundtrip(self):
        raw = {"energies": ["0 eV", "3.801e-5eV"], "amplitudes": [0.6, [0.0, 0.8]],
               "noise": {"kind": "brownian", "drift": 0, "diffusion": "1Hz"},
               "coupling": "2e4/eV", "horizon": "5ms", "steps": 10}
        cfg = ScenarioConfig.from_dict(raw)
        assert cfg.energies[1] == 3.801e-5 and cfg.coupling == 2e4 and cfg.horizon == 5e-3
        once = cfg.to_json()
        assert ScenarioConfig.from_json(once).to_json() == once
        assert cfg.initial_state().matrix[1, 1] == pytest.approx(0.64)

    def test_dense_hamiltonian(self):
        cfg = ScenarioConfig.from_dict({"hamiltonian": [[0, [0, 0.5]], [[0, -0.5], 1]], "amplitudes": [1, 0],
                                        "horizon": 1.0})
        cfg.validate()
        assert cfg.spectrum().n_levels == 2 and not cfg.spectrum().is_diagonal

    def test_file_load(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(preset("appendix-c").to_json())
        assert ScenarioConfig.load(path).digest() == preset("appendix-c").digest()

    def test_bad_json(self):
        with pytest.raises(ConfigInvalid):
            ScenarioConfig.from_json("{not json")


class TestEnsemble:
    def test_rng_streams_independent_of_order(self):
        a = path_rng(5, 7).random(3)
        path_rng(5, 6).random(3)
        np.testing.assert_array_equal(a, path_rng(5, 7).random(3))
        assert not np.array_equal(a, path_rng(5, 8).random(3))

    def test_kahan_sum(self):
        acc = KahanSum(1)
        for _ in range(10_000):
            acc.add(np.array([0.1]))
        assert abs(acc.total[0] - 1000.0) < 1e-12

    def test_deterministic_and_worker_independent(self):
        cfg = small("gamma", paths=CHUNK_SIZE + 50)
        a, b, c = run_ensemble(cfg), run_ensemble(cfg), run_ensemble(cfg, workers=2)
        for x in (b, c):
            for f in ("outcomes", "collapse", "final_posteriors", "mean_H", "mean_V", "mean_rho", "born_fraction"):
                assert np.array_equal(getattr(a, f), getattr(x, f)), f

    def test_zero_coupling_single_path(self):
        cfg = small(coupling=0.0, horizon=3.0, paths=1)
        r = run_ensemble(cfg)
        assert r.n_paths == 1 and r.collapse[0] == -1
        assert np.all(r.H_checkpoints == r.H_checkpoints[0, 0])
        assert r.invariants["ok"]

    def test_eigenstate_has_no_variance(self):
        r = run_ensemble(small(amplitudes=[0.0, 1.0], horizon=10.0))
        assert np.all(r.V_checkpoints == 0.0) and np.all(r.collapse == 1)

    def test_result_shapes(self):
        cfg = small()
        r = run_ensemble(cfg)
        M = cfg.steps + 1
        assert r.mean_rho.shape == (M, 2, 2) and r.born_fraction.shape == (M, 2)
        assert r.rho_checkpoints.shape == (cfg.paths, cfg.checkpoints, 2, 2)
        assert r.config_hash == cfg.digest()


class TestChecks:
    def test_degenerate_prior(self):
        r = run_ensemble(small(amplitudes=[1.0, 0.0], horizon=5.0, paths=50))
        rep = born_test(r)
        assert rep.passed and rep.statistic == 0.0

    def test_appendix_b_and_negative_control(self):
        r = run_ensemble(preset("appendix-b"))
        good = born_test(r)
        assert good.passed and all(abs(row["z"]) < 4 for row in good.rows)
        bad = born_test(r, prior=[0.4, 0.6])
        assert not bad.passed and abs(bad.statistic) > 4

    def test_reports_carry_effect_and_se(self):
        r = run_ensemble(small(paths=1000))
        for rep in ensemble_checks(r):
            assert rep.se is not None and np.isfinite(rep.effect)
            assert rep.passed, rep.line()
            json.dumps(rep.to_dict())

    def test_martingale_and_supermartingale(self):
        r = run_ensemble(small("poisson", paths=2000))
        assert martingale_test(r).passed
        assert supermartingale_test(r).passed

    def test_variance_bound_at_zero(self):
        p, E = np.array([0.3, 0.7]), np.array([0.0, 1.0])
        G = np.array([[0.0, 0.1], [0.1, 0.0]])
        # at t = 0 the bound sqrt(p1 p2)/2 * dE^2 exceeds V_0 = p1 p2 dE^2
        assert variance_decay_bound(p, E, G, 0.0) >= 0.21
        assert variance_decay_bound(p, E, G, 10.0) < variance_decay_bound(p, E, G, 1.0)

    def test_mean_density_at_time_zero_exact(self):
        r = run_ensemble(small(paths=800))
        rep = mean_density_test(r)
        assert rep.passed and rep.rows[0]["effect"] < 1e-12

    def test_cantelli(self):
        rep = cantelli_test(Poisson(1.0), 0.7, 0.1, [1.0, 5.0, 25.0], 10_000, seed=11)
        assert rep.passed, rep.line()


class TestOutput:
    def test_files_byte_identical(self, tmp_path):
        cfg = small(paths=300)
        for d in ("a", "b"):
            r = run_ensemble(cfg)
            write_ensemble(r, ensemble_checks(r), tmp_path / d)
        for name in ("aggregate.csv", "paths.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_csv_roundtrip_is_exact(self, tmp_path):
        r = run_ensemble(small(paths=100))
        write_ensemble(r, [], tmp_path)
        rows = read_csv(tmp_path / "aggregate.csv")
        assert [float(x["mean_H"]) for x in rows] == list(r.mean_H)
        assert list(rows[0])[:5] == ["t", "mean_H", "se_H", "mean_V", "se_V"]
        paths = read_csv(tmp_path / "paths.csv")
        assert {int(p["outcome"]) for p in paths} <= {1, 2}
        assert len(aggregate_records(r)) == r.grid.size

    def test_summary_has_provenance(self, tmp_path):
        r = run_ensemble(small(paths=100))
        write_ensemble(r, ensemble_checks(r), tmp_path)
        doc = json.loads((tmp_path / "summary.json").read_text())
        assert doc["config_hash"] == r.config_hash and doc["version"] and len(doc["reports"]) == 4
