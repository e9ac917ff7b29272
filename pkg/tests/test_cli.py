import json

import numpy as np
import pytest
import yaml

import memchua as m
from memchua import cli

from conftest import REF_COEFFS, make_samples


def write_config(path, **overrides):
    cfg = {"schema": 1}
    cfg.update(overrides)
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


SHORT_INTEGRATION = {"t_end": 0.05, "t_transient": 0.01}


class TestFit:
    def make_iv(self, tmp_path, n=50):
        voltages = np.linspace(-1.05, 2.55, n)
        voltages = voltages[voltages != 0]
        path = tmp_path / "iv.csv"
        m.save_iv_csv(path, make_samples(REF_COEFFS, voltages))
        return path

    def test_valid_file_writes_card(self, tmp_path):
        iv = self.make_iv(tmp_path)
        out = tmp_path / "out"
        rc = cli.main(["fit", "--iv", str(iv), "--v-set", "1.2",
                       "--v-stop", "2.6", "--out", str(out)])
        assert rc == 0
        table = m.load_state_table(out / "device_card.csv")
        got = table.states[0].poly.coefficients
        assert np.allclose(got, REF_COEFFS, rtol=1e-8)
        report = json.loads((out / "fit_report.json").read_text())
        assert report["rms_residual_A"] < 1e-15
        assert report["r_prog_ohm"] == pytest.approx(4.701e5, rel=1e-3)

    def test_empty_file_is_parse_error(self, tmp_path):
        iv = tmp_path / "iv.csv"
        iv.write_text("voltage_V,current_A\n")
        rc = cli.main(["fit", "--iv", str(iv), "--v-set", "1.2",
                       "--v-stop", "2.6", "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_missing_file_is_parse_error(self, tmp_path):
        rc = cli.main(["fit", "--iv", str(tmp_path / "nope.csv"),
                       "--v-set", "1.2", "--v-stop", "2.6"])
        assert rc == 2

    def test_three_rows_is_fit_failure(self, tmp_path):
        iv = self.make_iv(tmp_path, n=4)  # one voltage may hit zero
        samples = m.load_iv_csv(iv)[:3]
        m.save_iv_csv(iv, samples)
        rc = cli.main(["fit", "--iv", str(iv), "--v-set", "1.2",
                       "--v-stop", "2.6", "--out", str(tmp_path / "o")])
        assert rc == 3

    def test_malformed_row_is_parse_error(self, tmp_path, capsys):
        iv = tmp_path / "iv.csv"
        iv.write_text("voltage_V,current_A\n0.5,1e-6\n0.7,abc\n")
        rc = cli.main(["fit", "--iv", str(iv), "--v-set", "1.2",
                       "--v-stop", "2.6"])
        assert rc == 2
        assert "line 3" in capsys.readouterr().err


class TestDesign:
    def test_default_reference_design(self, tmp_path):
        out = tmp_path / "out"
        rc = cli.main(["design", "--out", str(out)])
        assert rc == 0
        report = json.loads((out / "design_report.json").read_text())
        assert report["ok"] is True
        assert report["r_ohm"] == pytest.approx(7643.0, rel=0.01)
        assert report["r_n_ohm"] == pytest.approx(6856.0, rel=0.01)
        assert report["l_H"] == pytest.approx(0.410, rel=0.01)
        assert report["c2_F"] == 1e-7

    def test_unsafe_target_names_check(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml", design={"v_eq": 1.5})
        rc = cli.main(["design", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 4
        assert "safe-window" in capsys.readouterr().err

    def test_linear_device_names_check(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml",
                           device={"coefficients": [1e-6, 0, 0, 0, 0]})
        rc = cli.main(["design", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 4
        assert "infeasible-G" in capsys.readouterr().err

    def test_unknown_config_key_is_parse_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml", desing={"v_eq": 0.9})
        rc = cli.main(["design", "--config", cfg])
        assert rc == 2
        assert "desing" in capsys.readouterr().err

    def test_wrong_schema_is_parse_error(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", schema=99)
        assert cli.main(["design", "--config", cfg]) == 2

    def test_env_var_supplies_config(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path / "c.yaml", design={"v_eq": 1.5})
        monkeypatch.setenv(cli.CONFIG_ENV_VAR, cfg)
        assert cli.main(["design", "--out", str(tmp_path / "o")]) == 4


class TestEquilibria:
    def test_reports_three_points(self, tmp_path):
        out = tmp_path / "out"
        rc = cli.main(["equilibria", "--out", str(out)])
        assert rc == 0
        eqs = json.loads((out / "equilibria.json").read_text())
        labels = {e["label"] for e in eqs}
        assert labels == {"P0", "P+", "P-"}
        assert all(e["stable"] is False for e in eqs)


class TestSimulate:
    def test_default_run_is_double_scroll(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           integration=SHORT_INTEGRATION)
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", cfg, "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "classification.json").read_text())
        assert summary["label"] == "double_scroll"
        assert summary["n_events"] == 0
        lines = (out / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t_s,v1_V,v2_V,iL_A"
        assert len(lines) == summary["n_samples"] + 1

    def test_equilibrium_start_is_fixed_point(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           integration=SHORT_INTEGRATION,
                           initial_state=[0.0, 0.0, 0.0])
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", cfg, "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "classification.json").read_text())
        assert summary["label"] == "fixed_point"

    def test_soa_abort_exits_5_with_events(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.yaml",
            components={"r": 7643.0, "r_n": 685.6, "l": 0.41,
                        "c1": 1e-8, "c2": 1e-7},
            integration={"t_end": 0.01, "t_transient": 0.0,
                         "soa_policy": "abort"})
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", cfg, "--out", str(out)])
        assert rc == 5
        events = (out / "events.csv").read_text().splitlines()
        assert len(events) >= 2
        assert (out / "trajectory.csv").exists()

    def test_adaptive_method_runs(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           integration={"method": "rk45", "t_end": 0.05,
                                        "t_transient": 0.01})
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", cfg, "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "classification.json").read_text())
        assert summary["label"] == "double_scroll"


SMALL_SWEEP = {"n_points": 4, "sigma": 0.05, "seed": 11, "workers": 1,
               "r_lo_frac": 0.4, "r_hi_frac": 1.3}


class TestSweep:
    def test_single_point_matches_simulate_extrema(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.yaml",
            integration=SHORT_INTEGRATION,
            sweep={"n_points": 1, "sigma": 0.0, "r_lo_frac": 1.0,
                   "r_hi_frac": 1.0})
        sweep_out = tmp_path / "sw"
        sim_out = tmp_path / "sim"
        assert cli.main(["sweep", "--config", cfg, "--out", str(sweep_out)]) == 0
        assert cli.main(["simulate", "--config", cfg, "--out", str(sim_out)]) == 0

        rows = (sweep_out / "bifurcation.csv").read_text().splitlines()[1:]
        sweep_vals = np.array([float(r.split(",")[1]) for r in rows])
        data = np.genfromtxt(sim_out / "trajectory.csv", delimiter=",",
                             skip_header=1)
        direct = np.array([e.value
                           for e in m.local_extrema(data[:, 0], data[:, 1])])
        assert np.array_equal(sweep_vals, direct)

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           integration=SHORT_INTEGRATION, sweep=SMALL_SWEEP)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out_a)]) == 0
        assert cli.main(["sweep", "--config", cfg, "--out", str(out_b)]) == 0
        assert (out_a / "bifurcation.csv").read_bytes() == \
            (out_b / "bifurcation.csv").read_bytes()
        assert (out_a / "sweep_summary.json").read_bytes() == \
            (out_b / "sweep_summary.json").read_bytes()

    def test_seed_flag_changes_output(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           integration=SHORT_INTEGRATION, sweep=SMALL_SWEEP)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out_a),
                         "--seed", "11"]) == 0
        assert cli.main(["sweep", "--config", cfg, "--out", str(out_b),
                         "--seed", "12"]) == 0
        assert (out_a / "bifurcation.csv").read_bytes() != \
            (out_b / "bifurcation.csv").read_bytes()

    def test_summary_lists_every_point(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           integration=SHORT_INTEGRATION, sweep=SMALL_SWEEP)
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "sweep_summary.json").read_text())
        assert len(summary) == SMALL_SWEEP["n_points"]
        rs = [p["r_prog_ohm"] for p in summary]
        assert rs == sorted(rs)
