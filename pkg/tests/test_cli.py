import json

import pytest

from sideways import cli
from sideways.errors import NonContractive

FAST = ["--grid-n", "64", "--grid-m", "33"]


def test_forward(tmp_path):
    assert cli.main(["forward", "--out", str(tmp_path), *FAST]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["command"] == "forward"
    assert report["forward"]["report"]["K_estimate"] < 1
    assert (tmp_path / "surface_forward_u.csv").exists()


@pytest.mark.parametrize("command,artifact", [("trace", "trace_psi.csv"), ("cauchy", "surface_v_eps.csv"), ("full", "surface_u_eps.csv")])
def test_single_runs(tmp_path, command, artifact):
    assert cli.main([command, "--out", str(tmp_path), "--eps", "1e-3", "--seed", "3", *FAST]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["eps"] == 1e-3
    assert report["config"]["seed"] == 3
    assert (tmp_path / artifact).exists()


def test_study_with_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "section5", "grid": {"n": 64, "m": 33, "x": 8.0, "y_max": 9.0}, "eps": [1e-2, 1e-3, 1e-4], "seed": 1, "tolerances": {"picard": 1e-8, "fixed_point": 1e-8}}))
    assert cli.main(["study", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert len(report["table"]) == 3
    assert "rates" in report


def test_unknown_config_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"n": 64}, "colour": "blue"}))
    assert cli.main(["study", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_bad_eps_exit_2(tmp_path):
    assert cli.main(["cauchy", "--eps", "0.2", "--out", str(tmp_path), *FAST]) == 2


def test_missing_config_exit_2(tmp_path):
    assert cli.main(["forward", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_non_contractive_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NonContractive(1.5)

    monkeypatch.setattr(cli, "picard_solve", boom)
    assert cli.main(["forward", "--out", str(tmp_path), *FAST]) == 3


def test_no_convergence_exit_4(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"n": 64, "m": 33}, "tolerances": {"picard": 1e-300}}))
    assert cli.main(["forward", "--config", str(cfg), "--out", str(tmp_path)]) == 4


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 2
