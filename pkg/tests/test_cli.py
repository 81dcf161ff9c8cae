import json

import numpy as np
import pytest

from vaporg2 import cli
from vaporg2.ensemble import RNG_DESCRIPTION

FAST = ["--tau-max", "2", "--tau-points", "201"]




def _manifest(path):
    return json.loads((path / "manifest.json").read_text())


def test_pair_thermal_limit(tmp_path):
    out = tmp_path / "p"
    assert cli.main(["pair", "--omega-r", "50", "--gamma12", "0", "--g12", "0", "--out", str(out)]) == 0
    names, data = cli.read_csv(out / "g2_pair.csv")
    assert names == ["tau", "numerator", "denominator", "g2"]
    assert data[0, 0] == 0 and 1.99 <= data[0, 3] <= 2.0
    text = (out / "g2_pair.csv").read_text()
    assert "# units: tau [1/Gamma]" in text
    man = _manifest(out)
    assert man["status"] == "ok"
    assert man["outputs"]["g2_pair.csv"] == cli.sha256(out / "g2_pair.csv")
    assert man["config"]["n_pairs"] == 1500 and man["rng"] == RNG_DESCRIPTION


def test_pair_rerun_is_bitwise_identical(tmp_path):
    args = ["pair", "--r1", "0,0,0", "--r2", "0.1,0.05,0.2", "--omega-r", "12"] + FAST
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a/g2_pair.csv").read_bytes() == (tmp_path / "b/g2_pair.csv").read_bytes()


def test_undriven_pair_fails_with_manifest(tmp_path, capsys):
    out = tmp_path / "u"
    code = cli.main(["pair", "--omega-r", "0", "--gamma12", "0.2", "--out", str(out)])
    assert code != 0
    assert "zero denominator: g2 undefined" in capsys.readouterr().err
    man = _manifest(out)
    assert man["status"] == "failed" and "zero denominator" in man["error"]


def test_pair_needs_a_geometry(tmp_path):
    assert cli.main(["pair", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "positions" in _manifest(tmp_path)["error"]


def test_config_diagnostics_name_line_and_field(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\ntemperature = 380\n\ntau_points = many\n")
    assert cli.main(["ensemble", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "run.cfg:4" in err and "tau_points" in err
    cfg.write_text("[run]\npairs = 5\ncolour = red\n")
    assert cli.main(["ensemble", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert "run.cfg:3" in capsys.readouterr().err


def test_precedence_and_mhz(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("omega_r_mhz = 60\ndelta_av = 1\n")
    args = cli.build_parser().parse_args(["ensemble", "--config", str(cfg), "--delta-av-mhz", "-12"])
    settings = cli.resolve_settings(args)
    assert settings["omega_r"] == pytest.approx(10.0)
    assert settings["delta_av"] == pytest.approx(-2.0)
    args = cli.build_parser().parse_args(["ensemble", "--omega-r", "3", "--omega-r-mhz", "3"])
    with pytest.raises(cli.ConfigError):
        cli.resolve_settings(args)


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["pair", "--gamma12", "0", "--g12", "0"] + FAST) == 0
    assert (tmp_path / "env/g2_pair.csv").exists()


def test_ensemble_outputs_and_single_pair_equivalence(tmp_path):
    base = ["--seed", "17", "--temperature", "400"] + FAST
    assert cli.main(["ensemble", "--pairs", "1", "--out", str(tmp_path / "e")] + base) == 0
    assert cli.main(["pair", "--out", str(tmp_path / "p")] + base) == 0
    _, ens = cli.read_csv(tmp_path / "e/g2_ensemble.csv")
    _, pair = cli.read_csv(tmp_path / "p/g2_pair.csv")
    assert np.array_equal(ens[:, 1], pair[:, 3])
    names, rows = cli.read_csv(tmp_path / "e/pairs.csv")
    assert names[:5] == ["index", "r12_x", "r12_y", "r12_z", "r12"] and names[-1] == "g2_zero"
    man = _manifest(tmp_path / "e")
    assert set(man["outputs"]) == {"g2_ensemble.csv", "pairs.csv"}
    assert man["averaging_mode"] == "per-pair-g2" and man["dipole_policy"] == "fixed-z"


def test_manifest_reproduces_run(tmp_path):
    args = ["ensemble", "--pairs", "6", "--seed", "5", "--dipole", "random",
            "--averaging", "ratio-of-averages"] + FAST
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(["ensemble", "--config", str(tmp_path / "a/manifest.json"), "--out", str(tmp_path / "b")]) == 0
    for name in ("g2_ensemble.csv", "pairs.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_layout(tmp_path):
    out = tmp_path / "s"
    code = cli.main(["sweep", "--axis", "omega_r", "--values", "5,10", "--pairs", "4",
                     "--seed-policy", "per-point", "--out", str(out)] + FAST)
    assert code == 0
    names, rows = cli.read_csv(out / "summary.csv")
    assert names[:4] == ["omega_r", "g2_zero", "g2_zero_stderr", "fwhm"]
    assert rows[:, 0].tolist() == [5.0, 10.0]
    man = _manifest(out)
    assert len(man["points"]) == 2 and man["points"][0]["seed"] != man["points"][1]["seed"]
    assert sum(1 for k in man["outputs"] if k.startswith("point_")) == 4


def test_sweep_reports_bad_point(tmp_path):
    code = cli.main(["sweep", "--axis", "temperature", "--values", "380,900", "--pairs", "2",
                     "--out", str(tmp_path)] + FAST)
    assert code == cli.EXIT_CONFIG
    assert "900" in _manifest(tmp_path)["error"]


def test_validate_subcommand(tmp_path, capsys):
    assert cli.main(["validate", "--n-configs", "10", "--out", str(tmp_path / "ok")]) == 0
    assert "[PASS] generator expansion" in capsys.readouterr().out
    assert cli.main(["validate", "--n-configs", "3", "--coefficients", "printed", "--out", str(tmp_path / "bad")]) != 0
    man = _manifest(tmp_path / "bad")
    assert man["status"] == "failed"
    assert "M[7,15]" in (tmp_path / "bad/validation.txt").read_text() or "M[8,15]" in man["checks"][0]["detail"]


def test_parser_flags():
    p = cli.build_parser()
    args = p.parse_args(["ensemble", "--config", "x.cfg", "--seed", "1", "--pairs", "3", "--temperature", "350",
                         "--omega-r", "20", "--delta-av", "0", "--tau-max", "5", "--tau-points", "11",
                         "--averaging", "ratio-of-averages", "--dipole", "random", "--workers", "2", "--out", "d"])
    assert args.workers == 2 and args.dipole == "random"
    with pytest.raises(SystemExit):
        p.parse_args(["ensemble", "--seed", "-3"])
