import numpy as np
import pytest

from frenet_adp import InvalidValue, ParseError, dump_config, load_config
from frenet_adp.cli import main


class TestDefaults:
    def test_empty_text_gives_benchmark_config(self):
        cfg = load_config("")
        assert cfg.path_family == "lissajous"
        assert (cfg.path_ax, cfg.path_ay, cfg.path_fx, cfg.path_fy) == (10.0, 15.0, 1.0, 2.0)
        assert (cfg.k1, cfg.k2, cfg.v_des) == (0.1, 0.05, 0.5)
        assert np.allclose(np.asarray(cfg.Q).reshape(3, 3), np.eye(3))
        assert np.allclose(np.asarray(cfg.R).reshape(2, 2), np.eye(2))
        assert (cfg.eta_c1, cfg.eta_c2, cfg.eta_a) == (0.5, 10.0, 5.0)
        assert np.allclose(cfg.wc0, [0, 0, 0, 0.5, 0, 0, 0.5, 0, 1.0])
        assert np.allclose(cfg.wa0, cfg.wc0)
        assert np.allclose(cfg.zeta0, [-0.5, 0.25, -np.pi / 6, 0.0])
        assert (cfg.dt, cfg.duration, cfg.log_stride) == (0.005, 60.0, 1)
        assert (cfg.baseline_nodes, cfg.baseline_horizon) == (120, 60.0)
        assert cfg.grid().n == 81

    def test_projection_bound_default(self):
        cfg = load_config("")
        assert cfg.bound() == pytest.approx(10.0 * np.linalg.norm(cfg.wa0))

    def test_projection_bound_override(self):
        cfg = load_config("adp.proj_bound = 2.5")
        assert cfg.bound() == 2.5


class TestParsing:
    def test_comments_and_blanks(self):
        cfg = load_config("# comment\n\ngains.k1 = 0.2  # trailing\n")
        assert cfg.k1 == 0.2

    def test_vectors(self):
        cfg = load_config("adp.wc0 = 1, 2, 3, 4, 5, 6, 7, 8, 9")
        assert np.allclose(cfg.wc0, np.arange(1, 10))

    def test_family(self):
        cfg = load_config("path.family = circle\npath.radius = 3.0")
        assert cfg.path().family == "circle"

    def test_missing_equals(self):
        with pytest.raises(ParseError, match="line 2"):
            load_config("gains.k1 = 0.1\nbogus line\n")

    def test_unknown_key(self):
        with pytest.raises(InvalidValue, match="gains.k3"):
            load_config("gains.k3 = 1.0")

    def test_bad_float(self):
        with pytest.raises(InvalidValue, match="gains.k1"):
            load_config("gains.k1 = fast")

    def test_wrong_vector_length(self):
        with pytest.raises(InvalidValue, match="adp.wc0"):
            load_config("adp.wc0 = 1, 2, 3")


class TestValidation:
    def test_negative_gain_names_key(self):
        with pytest.raises(InvalidValue, match="gains.k1"):
            load_config("gains.k1 = -1")

    def test_asymmetric_q_names_key(self):
        with pytest.raises(InvalidValue, match="cost.Q"):
            load_config("cost.Q = 1, 0.5, 0, 0, 1, 0, 0, 0, 1")

    def test_saturated_initial_phi_names_key(self):
        with pytest.raises(InvalidValue, match="sim.zeta0"):
            load_config("sim.zeta0 = 0, 0, 0, 1.0")

    def test_bad_dt_names_key(self):
        with pytest.raises(InvalidValue, match="sim.dt"):
            load_config("sim.dt = 0")

    def test_small_grid_rejected(self):
        with pytest.raises(InvalidValue, match="adp.grid"):
            load_config("adp.grid.s = 0\nadp.grid.y = 0\nadp.grid.theta = 0\nadp.grid.phi = 0")


class TestDumpRoundTrip:
    def test_idempotent(self):
        text = "gains.k1 = 0.3\npath.family = circle\npath.radius = 2.0\nadp.eta_a = 1.25\n"
        cfg1 = load_config(text)
        dumped = dump_config(cfg1)
        cfg2 = load_config(dumped)
        assert dump_config(cfg2) == dumped

    def test_default_round_trip(self):
        cfg = load_config("")
        assert dump_config(load_config(dump_config(cfg))) == dump_config(cfg)


SHORT = "sim.duration = 2.0\n"
EQUILIBRIUM = (
    "path.family = line\nsim.zeta0 = 0, 0, 0, 0\nsim.duration = 5.0\nsim.dt = 0.01\n"
    "baseline.nodes = 26\nbaseline.horizon = 5.0\n"
)


class TestCli:
    def test_dry_run(self, tmp_path, capsys):
        cfg_file = tmp_path / "c.cfg"
        cfg_file.write_text(SHORT)
        assert main(["--config", str(cfg_file), "--dry-run"]) == 0
        assert "config ok" in capsys.readouterr().out
        assert not (tmp_path / "out").exists()

    def test_run_writes_csv_and_summary(self, tmp_path, capsys):
        cfg_file = tmp_path / "c.cfg"
        cfg_file.write_text(SHORT)
        out = tmp_path / "out"
        assert main(["--config", str(cfg_file), "--out", str(out)]) == 0
        csv = (out / "run.csv").read_text().splitlines()
        assert len(csv) == 1 + int(round(2.0 / 0.005)) + 1  # header + samples
        stdout = capsys.readouterr().out
        assert "[summary]" in stdout
        assert "rank = 9" in stdout
        assert (out / "summary.txt").read_text().startswith("[summary]")

    def test_flag_overrides(self, tmp_path):
        out = tmp_path / "out"
        assert main(["--out", str(out), "--duration", "1.0", "--dt", "0.01"]) == 0
        rows = (out / "run.csv").read_text().splitlines()
        assert len(rows) == 1 + 101

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("gains.k1 = -2\n")
        assert main(["--config", str(cfg_file)]) == 2
        assert "gains.k1" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "nope.cfg")]) == 2

    def test_abort_exit_code_with_partial_log(self, tmp_path, capsys):
        cfg_file = tmp_path / "abort.cfg"
        cfg_file.write_text("gains.k2 = 1000\nsim.zeta0 = -0.5, 0.25, -0.5, 0.999999\nsim.duration = 10\n")
        out = tmp_path / "out"
        assert main(["--config", str(cfg_file), "--out", str(out)]) == 1
        err = capsys.readouterr().err
        assert "ABORTED" in err and "t =" in err
        assert (out / "run.csv").exists()

    def test_compare_baseline(self, tmp_path, capsys):
        cfg_file = tmp_path / "eq.cfg"
        cfg_file.write_text(EQUILIBRIUM)
        out = tmp_path / "cmp"
        assert main(["--config", str(cfg_file), "--out", str(out), "--compare-baseline"]) == 0
        assert (out / "adp.csv").exists()
        assert (out / "baseline.csv").exists()
        metrics = dict(
            line.split(" = ") for line in (out / "metrics.txt").read_text().splitlines() if " = " in line
        )
        # equilibrium scenario: all deviations vanish
        assert float(metrics["rms_dev_y"]) < 1e-9
        assert float(metrics["max_dev_theta"]) < 1e-9

    def test_default_out_dir_is_created(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["--duration", "0.5"]) == 0
        assert (tmp_path / "out" / "run.csv").exists()
