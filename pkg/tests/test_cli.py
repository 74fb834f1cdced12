from pathlib import Path

import numpy as np
import pytest

from dualsat import cli, validate
from dualsat.channel import BeamPattern
from dualsat.cli import (ConfigError, load_config, main, parse_config_text,
                         resolved_lines)

TINY = """
experiment.trials = 2
experiment.pool_size = 24
experiment.master_seed = 41
experiment.snr_points_db = 10, 21
geometry.beams_per_satellite = 3
experiment.scenarios = coordinated, independent, frequency_split
experiment.algorithms = siua, sus, random
"""

SUMMARY_HEADER = "scenario,algorithm,snr_db,mean_sr_bps_hz,std_sr,trials,discards"


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return path


class TestConfigParsing:
    def test_defaults_resolve(self):
        cfg = load_config(None)
        assert cfg.trials == 100
        assert cfg.pool_size == 700
        assert cfg.budget.snr_ref_db == 21.0

    def test_reference_config_file_parses(self):
        cfg = load_config(Path(__file__).parent.parent
                          / "configs" / "default.cfg")
        assert cfg.beams_per_satellite == 7
        assert cfg.lattice_offset_km == (150.0, 0.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("experiment.bogus = 3")

    def test_bad_line_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("garbage line")

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigError, match="experiment.trials"):
            parse_config_text("experiment.trials = soon")

    def test_comments_and_blanks_ignored(self):
        vals = parse_config_text("# comment\n\nexperiment.trials = 7 # tail\n")
        assert vals["experiment.trials"] == 7

    def test_invalid_trials_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("experiment.trials = 0\n")
        rc = main(["run", "--config", str(bad), "--out", str(tmp_path)])
        assert rc == cli.EXIT_CONFIG
        assert "experiment.trials" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path, capsys):
        rc = main(["run", "--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path)])
        assert rc == cli.EXIT_CONFIG

    def test_bad_cli_usage_exit_code(self, capsys):
        assert main(["sweep", "--axis", "bogus"]) == cli.EXIT_CONFIG

    def test_overrides(self, tiny_cfg):
        cfg = load_config(tiny_cfg, seed=999, trials=5)
        assert cfg.master_seed == 999
        assert cfg.trials == 5

    def test_resolved_lines_cover_every_key(self):
        lines = resolved_lines(load_config(None))
        assert lines[0].startswith("dualsat ")
        keys = {line.split(" = ")[0] for line in lines[1:]}
        assert keys == set(cli.DEFAULTS)


class TestCmdRun:
    def test_outputs_and_header(self, tiny_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["run", "--config", str(tiny_cfg), "--out", str(out)])
        assert rc == 0
        summary = (out / "summary.csv").read_text()
        lines = summary.splitlines()
        data_start = next(i for i, l in enumerate(lines)
                          if not l.startswith("#"))
        assert lines[data_start] == SUMMARY_HEADER
        # resolved config echoed in the comment header
        assert any("experiment.master_seed = 41" in l
                   for l in lines[:data_start])
        assert (out / "trials.csv").exists()
        assert "coordinated" in capsys.readouterr().out

    def test_rerun_byte_identical(self, tiny_cfg, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(tiny_cfg), "--out",
                     str(out1)]) == 0
        assert main(["run", "--config", str(tiny_cfg), "--out",
                     str(out2)]) == 0
        assert (out1 / "summary.csv").read_bytes() == \
            (out2 / "summary.csv").read_bytes()
        assert (out1 / "trials.csv").read_bytes() == \
            (out2 / "trials.csv").read_bytes()

    def test_worker_count_identical_data(self, tiny_cfg, tmp_path):
        # the echoed config differs in experiment.workers, so compare the
        # data portion byte for byte
        def data(path):
            return "\n".join(l for l in path.read_text().splitlines()
                             if not l.startswith("#"))
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        workers2 = tmp_path / "tiny2.cfg"
        workers2.write_text(TINY + "experiment.workers = 2\n")
        assert main(["run", "--config", str(tiny_cfg), "--out",
                     str(out1)]) == 0
        assert main(["run", "--config", str(workers2), "--out",
                     str(out2)]) == 0
        assert data(out1 / "summary.csv") == data(out2 / "summary.csv")
        assert data(out1 / "trials.csv") == data(out2 / "trials.csv")

    def test_csv_is_locale_independent(self, tiny_cfg, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", str(tiny_cfg), "--out", str(out)])
        raw = (out / "summary.csv").read_bytes()
        assert b"\r" not in raw
        text = raw.decode("ascii")  # pure ASCII, dot decimal separator
        for line in text.splitlines():
            if not line.startswith("#") and line:
                assert ";" not in line


class TestCmdSweep:
    def test_snr_sweep_row_count(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(TINY.replace("10, 21", "0, 5, 10, 15, 20, 25, 30"))
        out = tmp_path / "out"
        assert main(["sweep", "--axis", "snr", "--config", str(cfg),
                     "--out", str(out)]) == 0
        lines = [l for l in (out / "sweep_snr.csv").read_text().splitlines()
                 if l and not l.startswith("#")]
        combos = {(l.split(",")[0], l.split(",")[1]) for l in lines[1:]}
        assert len(lines) - 1 == 7 * len(combos)

    def test_pool_sweep_rows_per_algorithm(self, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text(TINY + "experiment.pool_sweep = 12, 18, 24\n")
        out = tmp_path / "out"
        assert main(["sweep", "--axis", "pool", "--config", str(cfg),
                     "--out", str(out)]) == 0
        lines = [l for l in (out / "sweep_pool.csv").read_text().splitlines()
                 if l and not l.startswith("#")]
        assert lines[0].split(",")[:4] == ["scenario", "algorithm",
                                           "pool_size", "snr_db"]
        for alg in ("siua", "sus"):
            assert sum(1 for l in lines[1:]
                       if l.split(",")[1] == alg) == 3


class TestValidateChecks:
    def test_fresh_build_passes(self):
        messages = []
        assert validate.run_all(out=messages.append)
        assert all(m.startswith("PASS") for m in messages)

    def test_wrong_pattern_constant_fails_half_power(self):
        bad = BeamPattern(g_max=1.0, theta_3db=np.arctan(85.0 / 35786.0),
                          u_coeff=2.0)
        res = validate.check_gain_half_power(bad)
        assert not res.passed

    def test_noisy_solver_fails_kkt(self):
        res = validate.check_solver_kkt(n_cases=20, power_noise=1.0)
        assert not res.passed
