import json
import math

import numpy as np
import pytest

from isccopt import netmodel as nm
from isccopt.cli import main
from isccopt.config import DEFAULT_CONFIG, build_config, load_config
from isccopt.cost import total_cost
from isccopt.errors import ConfigError
from isccopt.optimizer import solution_from_dict


class TestConfig:
    def test_defaults_build(self):
        cfg = load_config(None)
        assert cfg.scenario.t_max == 0.8
        assert cfg.scenario.g_over_bn0 == pytest.approx(100.0)
        assert cfg.network.depth == 7
        assert cfg.network.layer(1).weights is not None
        assert cfg.seed == 0

    def test_unknown_keys_rejected_everywhere(self):
        with pytest.raises(ConfigError):
            build_config({"bogus": 1})
        with pytest.raises(ConfigError):
            build_config({"scenario": {"t_max": 0.8, "nope": 2}})
        with pytest.raises(ConfigError):
            build_config({"network": {"layers": [{"kind": "fc", "n": 4,
                                                  "n_prev": 4, "foo": 1}],
                                      "input_dim": 4}})
        with pytest.raises(ConfigError):
            build_config({"echo": {"target": {"delay": 1e-6, "doppler_hz": 0,
                                              "gain": [1, 0], "x": 1}}})
        with pytest.raises(ConfigError):
            build_config({"solver": {"eps_rho": 1e-6, "mystery": True}})

    def test_partial_override_merges_defaults(self):
        cfg = build_config({"scenario": {"t_max": 1.2}})
        assert cfg.scenario.t_max == 1.2
        assert cfg.scenario.r_t == 0.85  # default preserved

    def test_snr_db_conversion(self):
        cfg = build_config({"scenario": {"snr_db": 0.0}})
        assert cfg.scenario.g_over_bn0 == pytest.approx(1.0)

    def test_splits_must_fit_depth(self):
        with pytest.raises(ConfigError):
            build_config({"scenario": {"splits": [8]}})

    def test_weights_file(self, tmp_path):
        rng = np.random.default_rng(0)
        ws = [rng.standard_normal((4, 6)), rng.standard_normal((2, 4))]
        net = nm.NetworkModel(layers=(nm.fc(4, 6), nm.fc(2, 4)),
                              input_dim=6).with_weights(ws)
        path = tmp_path / "w.bin"
        nm.save_weights(net, path)
        cfg = build_config({
            "scenario": {"splits": [1, 2]},
            "network": {"input_dim": 6,
                        "layers": [{"kind": "fc", "n": 4, "n_prev": 6},
                                   {"kind": "fc", "n": 2, "n_prev": 4}],
                        "weights_file": str(path)},
        })
        np.testing.assert_array_equal(cfg.network.layer(1).weights, ws[0])

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_resolved_echoes_defaults(self):
        cfg = build_config({})
        assert cfg.resolved["scenario"] == DEFAULT_CONFIG["scenario"]
        assert cfg.resolved["seed"] == 0


class TestCliSolve:
    def test_exit_zero_and_outputs(self, tmp_path, capsys):
        rc = main(["solve", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "solution.csv").exists()
        payload = json.loads((tmp_path / "solution.json").read_text())
        assert payload["solution"]["feasible"] is True
        assert payload["config"]["scenario"]["t_max"] == 0.8
        out = capsys.readouterr().out
        assert "proposed: E=" in out

    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--seed", "7", "--out", str(a)]) == 0
        assert main(["solve", "--seed", "7", "--out", str(b)]) == 0
        assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()
        assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()

    def test_solution_json_recosts_within_1e12(self, tmp_path):
        assert main(["solve", "--out", str(tmp_path)]) == 0
        payload = json.loads((tmp_path / "solution.json").read_text())
        sol = solution_from_dict(payload["solution"])
        cfg = load_config(None)
        recost = total_cost(sol.alloc, cfg.network, cfg.scenario)
        assert math.isclose(recost.e_total, sol.cost.e_total, rel_tol=1e-12)

    def test_infeasible_exits_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "tight.json"
        cfg_path.write_text(json.dumps({"scenario": {"t_max": 0.5001}}))
        rc = main(["solve", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == 2
        assert "infeasible" in capsys.readouterr().err

    def test_config_error_exits_3(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"scenario": {"wrong_key": 1}}))
        rc = main(["solve", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == 3
        assert "config error" in capsys.readouterr().err


class TestCliSweepAndBaseline:
    def test_sweep_row_count(self, tmp_path):
        rc = main(["sweep", "--axis", "t_max",
                   "--values", "0.6,0.8,1.0,1.2,1.4", "--out", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert len(lines) == 1 + 5 * 4  # header + 5 values x 4 origins

    def test_sweep_bad_values(self, tmp_path):
        rc = main(["sweep", "--axis", "t_max", "--values", "abc",
                   "--out", str(tmp_path)])
        assert rc == 3

    def test_baseline(self, tmp_path, capsys):
        rc = main(["baseline", "--kind", "on_device", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "baseline_on_device.csv").exists()
        assert "on_device: E=" in capsys.readouterr().out


class TestCliValidateFitSense:
    def test_validate_quantizer(self, tmp_path, capsys):
        rc = main(["validate", "--suite", "quantizer", "--trials", "5000",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert "PASS quantizer" in capsys.readouterr().out
        payload = json.loads((tmp_path / "validate_quantizer.json").read_text())
        assert payload["passed"] is True

    def test_fit_r0_recovers(self, tmp_path, capsys):
        a, b = 0.6, 50.0
        powers = np.linspace(0.001, 0.2, 50)
        rows = np.column_stack([powers, a * np.arctan(b * powers)])
        path = tmp_path / "samples.csv"
        np.savetxt(path, rows, delimiter=",")
        rc = main(["fit-r0", "--samples", str(path), "--out", str(tmp_path)])
        assert rc == 0
        payload = json.loads((tmp_path / "fit_r0.json").read_text())
        assert payload["a"] == pytest.approx(a, rel=1e-6)
        assert payload["b"] == pytest.approx(b, rel=1e-6)

    def test_sense_demo(self, tmp_path, capsys):
        rc = main(["sense-demo", "--out", str(tmp_path)])
        assert rc == 0
        spec = np.loadtxt(tmp_path / "spectrogram.csv", delimiter=",")
        assert np.linalg.norm(spec) == pytest.approx(1.0, abs=1e-9)
        assert "spectrogram" in capsys.readouterr().out
