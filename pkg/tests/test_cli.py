import csv

import numpy as np
import pytest

from epirep import cli

BASE_PARAMS = """\
c_P = 1.0
alpha = 0.5
beta_u = 0.3
beta_p = 0.15
c_IU = 2.0
c_IP = 1.0
L = 80.0
gamma = 0.1
"""


@pytest.fixture
def config(tmp_path):
    def make(extra="", name="run.cfg"):
        path = tmp_path / name
        path.write_text(BASE_PARAMS + extra)
        return path
    return make


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestConfigHandling:
    def test_unknown_key_rejected_by_name(self, config, capsys):
        cfg = config("mystery_knob = 3\n")
        assert cli.main(["equilibria", "--config", str(cfg)]) == 2
        assert "mystery_knob" in capsys.readouterr().err

    def test_missing_required_key_named(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(BASE_PARAMS.replace("gamma = 0.1\n", ""))
        assert cli.main(["equilibria", "--config", str(cfg)]) == 2
        assert "gamma" in capsys.readouterr().err

    def test_malformed_line_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(BASE_PARAMS + "this is not a key value line\n")
        assert cli.main(["equilibria", "--config", str(cfg)]) == 2

    def test_bad_value_rejected(self, config, capsys):
        cfg = config("t_end = soon\n")
        assert cli.main(["simulate", "--config", str(cfg)]) == 2
        assert "t_end" in capsys.readouterr().err

    def test_invalid_model_params_rejected(self, config, capsys):
        cfg = config()
        assert cli.main(["equilibria", "--config", str(cfg), "--gamma", "-0.5"]) == 2

    def test_missing_config_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.cfg"
        assert cli.main(["equilibria", "--config", str(missing)]) == 2

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# header\n\n" + BASE_PARAMS + "\nt_end = 5.0  # short\n")
        assert cli.main(["equilibria", "--config", str(cfg),
                         "--out", str(tmp_path / "o")]) == 0


class TestEquilibriaCommand:
    def test_only_disease_free_stable_at_high_recovery(self, config, tmp_path):
        out = tmp_path / "out"
        cfg = config()
        assert cli.main(["equilibria", "--config", str(cfg),
                         "--gamma", "0.2", "--out", str(out)]) == 0
        rows = {r["id"]: r for r in read_csv(out / "equilibria.csv")}
        assert rows["E1"]["stability"] == "stable"
        assert [r for r in rows.values() if r["stability"] == "stable"] == [rows["E1"]]
        assert rows["E2"]["exists"] == "0"
        assert rows["E0"]["regime"] == "gamma > beta_p"

    def test_mixed_equilibrium_row(self, config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["equilibria", "--config", str(config()),
                         "--out", str(out)]) == 0
        rows = {r["id"]: r for r in read_csv(out / "equilibria.csv")}
        assert rows["E3"]["stability"] == "stable"
        assert float(rows["E3"]["y"]) == pytest.approx(1 / 6)
        assert float(rows["E3"]["z_S"]) == pytest.approx(0.6)

    def test_boundary_gamma_exits_with_diagnostic(self, config, capsys):
        assert cli.main(["equilibria", "--config", str(config()),
                         "--gamma", "0.15"]) == 2
        assert "beta_p" in capsys.readouterr().err


class TestSimulateCommand:
    def test_writes_parseable_trajectory(self, config, tmp_path):
        out = tmp_path / "out"
        cfg = config("t_end = 20.0\n")
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out / "trajectory.csv")
        assert set(rows[0]) == {"t", "y", "z_S", "z_I", "beta_eff", "delta_F"}
        for row in rows:
            for v in row.values():
                float(v)  # every field numeric

    def test_disease_free_start_stays_disease_free(self, config, tmp_path):
        out = tmp_path / "out"
        cfg = config("t_end = 20.0\ns0 = 0.0, 0.4, 0.0\n")
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert all(float(r["y"]) == 0.0 for r in read_csv(out / "trajectory.csv"))

    def test_byte_identical_reruns(self, config, tmp_path):
        cfg = config("t_end = 30.0\n")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()

    def test_prints_converged_state(self, config, tmp_path, capsys):
        cfg = config("t_end = 2000.0\n")
        assert cli.main(["simulate", "--config", str(cfg), "--gamma", "0.2",
                         "--out", str(tmp_path / "o")]) == 0
        assert "converged to" in capsys.readouterr().out


class TestBifurcateCommand:
    def test_four_exchange_points_for_default_range(self, config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["bifurcate", "--config", str(config()),
                         "--out", str(out)]) == 0
        rows = read_csv(out / "bifurcations.csv")
        got = {r["label"]: float(r["gamma_star"]) for r in rows}
        assert got.keys() == {"T0", "T1", "T2", "T3"}
        assert got["T0"] == pytest.approx(0.075, abs=1e-8)
        assert got["T1"] == pytest.approx(0.15, abs=1e-8)
        assert got["T2"] == pytest.approx(0.125, abs=1e-8)
        assert got["T3"] == pytest.approx(0.0625, abs=1e-8)

    def test_empty_range_yields_no_rows(self, config, tmp_path):
        out = tmp_path / "out"
        cfg = config("gamma_range = 0.16, 0.30\n")
        assert cli.main(["bifurcate", "--config", str(cfg), "--out", str(out)]) == 0
        assert read_csv(out / "bifurcations.csv") == []

    def test_origin_branch_is_flat(self, config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["bifurcate", "--config", str(config()),
                         "--out", str(out)]) == 0
        e0 = [r for r in read_csv(out / "branches.csv") if r["branch"] == "E0"]
        assert e0
        assert all(float(r["y"]) == 0.0 and float(r["z_S"]) == 0.0 for r in e0)
        assert all(r["stable"] == "0" for r in e0)

    def test_include_nonphysical_extends_branches(self, config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cfg = config()
        assert cli.main(["bifurcate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli.main(["bifurcate", "--config", str(cfg), "--out", str(out2),
                         "--include-nonphysical"]) == 0
        n1 = len(read_csv(out1 / "branches.csv"))
        n2 = len(read_csv(out2 / "branches.csv"))
        assert n2 > n1

    def test_thread_cap_env(self, config, tmp_path, monkeypatch):
        monkeypatch.setenv("EPIREP_THREADS", "1")
        out = tmp_path / "out"
        assert cli.main(["bifurcate", "--config", str(config()),
                         "--out", str(out)]) == 0
        assert (out / "branches.csv").is_file()


class TestSlowfastCommand:
    def test_eps_one_matches_simulate_bit_for_bit(self, config, tmp_path):
        cfg = config("t_end = 50.0\n")
        out_sim, out_sf = tmp_path / "sim", tmp_path / "sf"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out_sim)]) == 0
        assert cli.main(["slowfast", "--config", str(cfg), "--eps", "1.0",
                         "--out", str(out_sf)]) == 0
        assert (out_sim / "trajectory.csv").read_bytes() == \
            (out_sf / "trajectory.csv").read_bytes()

    def test_fast_behavior_oscillations(self, config, tmp_path):
        out = tmp_path / "out"
        cfg = config("t_end = 150.0\ns0 = 0.3, 0.5, 0.0\neps = 0.01\n")
        assert cli.main(["slowfast", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out / "trajectory.csv")
        dF = np.array([float(r["delta_F"]) for r in rows])
        signs = np.sign(dF[dF != 0])
        assert int(np.sum(signs[1:] != signs[:-1])) >= 3

    def test_fast_epidemic_writes_delay_report(self, config, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = config("t_end = 16.0\ns0 = 0.001, 0.01, 0.0\n"
                     "mode = fast-epidemic\neps = 0.01\n")
        assert cli.main(["slowfast", "--config", str(cfg), "--out", str(out)]) == 0
        row = read_csv(out / "delay.csv")[0]
        assert float(row["delay"]) > 0
        assert float(row["eps"]) == 0.01
        assert "bifurcation delay" in capsys.readouterr().out

    def test_not_applicable_delay_reports_and_exits_zero(self, config, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = config("t_end = 30.0\ns0 = 0.3, 0.9, 0.0\n"
                     "mode = fast-epidemic\neps = 0.01\n")
        assert cli.main(["slowfast", "--config", str(cfg), "--out", str(out)]) == 0
        row = read_csv(out / "delay.csv")[0]
        assert np.isnan(float(row["delay"]))
        assert "not applicable" in capsys.readouterr().out

    def test_bad_mode_rejected(self, config, capsys):
        cfg = config("mode = sideways\n")
        assert cli.main(["slowfast", "--config", str(cfg)]) == 2
        assert "mode" in capsys.readouterr().err

    def test_eps_out_of_range_rejected(self, config):
        assert cli.main(["slowfast", "--config", str(config()), "--eps", "2.0"]) == 2
