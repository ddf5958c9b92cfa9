"""Deterministic artifacts and the command line front end."""

import json

import numpy as np
import pytest

from sigma2glue import cli
from sigma2glue.reporting import (
    dumps_json,
    format_float,
    parse_sweep,
    read_config_file,
    write_csv,
    write_json,
)


# -------------------------------------------------------------- reporting


@pytest.mark.parametrize("x", [0.05, 1 / 3, -1e-300, 2.5e17, 0.1 + 0.2])
def test_float_format_round_trips(x):
    assert float(format_float(x)) == x


def test_float_format_non_finite():
    assert format_float(np.nan) == "NaN"
    assert format_float(np.inf) == "Infinity"
    assert format_float(-np.inf) == "-Infinity"


def test_json_sorted_keys_and_types():
    doc = dumps_json({"b": 1, "a": [True, None, "x"], "c": np.array([0.5])})
    assert doc == '{"a": [true, null, "x"], "b": 1, "c": [0.5]}\n'


def test_json_rejects_unknown_types():
    with pytest.raises(TypeError):
        dumps_json({"x": object()})


def test_json_is_valid_json(tmp_path):
    path = tmp_path / "doc.json"
    write_json(path, {"vals": np.linspace(0, 1, 3), "n": 5, "ok": True})
    loaded = json.loads(path.read_text())
    assert loaded["n"] == 5
    assert loaded["vals"] == [0.0, 0.5, 1.0]


def test_csv_columns(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, {"a": [1, 2], "b": np.array([0.5, 1.5])})
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "1,0.5"
    with pytest.raises(ValueError):
        write_csv(path, {"a": [1, 2], "b": [1]})


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment\n"
        "n = 5\n"
        "eps = 0.1  # trailing comment\n"
        "format = json\n"
        "flag = true\n"
        "eps = 0.2\n"
    )
    cfg = read_config_file(path)
    assert cfg == {"n": 5, "eps": 0.2, "format": "json", "flag": True}


def test_config_file_rejects_bad_line(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("just words\n")
    with pytest.raises(ValueError):
        read_config_file(path)


def test_parse_sweep():
    assert parse_sweep("eps=0.2,0.1") == ("eps", [0.2, 0.1])
    with pytest.raises(ValueError):
        parse_sweep("0.2,0.1")
    with pytest.raises(ValueError):
        parse_sweep("eps=")


# -------------------------------------------------------------------- cli


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_orbit_command_writes_artifacts(tmp_path):
    assert run_cli("orbit", "--n", 5, "--k", 2, "--eps", 0.1, "--tmax", 10, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["period"] > 0
    assert report["neck"]["c_v"] < 1e-2
    header = (tmp_path / "orbit.csv").read_text().splitlines()[0]
    assert header == "t,v,vdot,vddot,h,H"


def test_orbit_command_rejects_out_of_range_eps(tmp_path, capsys):
    assert run_cli("orbit", "--n", 5, "--eps", 0.9, "--out", tmp_path) == 2
    assert "eps" in capsys.readouterr().err


def test_orbit_sweep_emits_ratio_table(tmp_path):
    assert run_cli("orbit", "--n", 5, "--sweep", "eps=0.2,0.1", "--out", tmp_path) == 0
    assert (tmp_path / "orbit_eps0.2.csv").exists()
    assert (tmp_path / "report_eps0.1.json").exists()
    lines = (tmp_path / "sweep_orbit.csv").read_text().splitlines()
    assert lines[0].startswith("eps,H0,period,c_v")
    assert "c_vddot_ratio" in lines[0]
    assert len(lines) == 3


def test_family_command(tmp_path):
    assert run_cli("family", "--n", 5, "--eps", 0.1, "--b", 0.1, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "family_report.json").read_text())
    assert report["b"] == 0.1
    assert report["expansion"]["c_u"] < 10.0
    rows = (tmp_path / "family.csv").read_text().splitlines()
    assert rows[0] == "r,u,r_du,r2_d2u"
    assert len(rows) == 601


def test_solve_mode_command(tmp_path):
    code = run_cli(
        "solve-mode", "--n", 5, "--eps", 0.1, "--ell", 1,
        "--window=-2,2", "--num", 301, "--out", tmp_path,
    )
    assert code == 0
    report = json.loads((tmp_path / "mode_report.json").read_text())
    assert report["residual"] < 1e-10
    t0 = float((tmp_path / "mode.csv").read_text().splitlines()[1].split(",")[0])
    assert t0 == -2.0


def test_verify_command_green(tmp_path):
    assert run_cli("verify", "--out", tmp_path) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["all_passed"] is True
    assert set(report["suites"]) == {"jacobi", "linearized", "equivariance", "extension"}


def test_verify_suite_subset(tmp_path):
    assert run_cli("verify", "--suite", "extension", "--out", tmp_path) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert list(report["suites"]) == ["extension"]


def test_verify_unknown_suite(tmp_path):
    assert run_cli("verify", "--suite", "bogus", "--out", tmp_path) == 2


def test_verify_failing_invariant_exits_nonzero(tmp_path, monkeypatch, capsys):
    def broken():
        return [{"invariant": "always fails", "measured": 1.0, "bound": 0.5}]

    monkeypatch.setitem(cli._SUITES, "extension", broken)
    assert run_cli("verify", "--suite", "extension", "--out", tmp_path) == 3
    assert "always fails" in capsys.readouterr().err
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["all_passed"] is False


def test_glue_command_report_shape(tmp_path):
    assert run_cli("glue", "--n", 5, "--eps", 0.05, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "glue_report.json").read_text())
    for key in ("config", "b", "Lambda", "gaps", "completeness_min", "iterations"):
        assert key in report
    assert abs(report["gaps"]["l0_value"]) <= 1e-6
    assert report["completeness_min"] > 0
    rows = (tmp_path / "matched_factor.csv").read_text().splitlines()
    assert rows[0] == "r,factor"
    assert len(rows) > 1000


def test_glue_eps_sweep(tmp_path):
    assert run_cli("glue", "--n", 5, "--eps-sweep", "0.1,0.05", "--out", tmp_path) == 0
    lines = (tmp_path / "background_convergence.csv").read_text().splitlines()
    assert len(lines) == 3
    summary = json.loads((tmp_path / "sweep_glue.json").read_text())
    assert summary["monotone_decreasing"] is True
    assert (tmp_path / "matched_factor_eps0.1.csv").exists()


def test_glue_guard_violating_config(tmp_path, capsys):
    # l <= max(delta5, 2 delta4) violates the config hypotheses
    assert run_cli("glue", "--n", 5, "--eps", 0.05, "--l", 0.01, "--out", tmp_path) == 2
    assert "l" in capsys.readouterr().err


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("glue", "--n", 5, "--eps", 0.05, "--out", out) == 0
    assert (a / "glue_report.json").read_bytes() == (b / "glue_report.json").read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 5\neps = 0.2\ntmax = 8\n")
    assert run_cli("orbit", "--config", cfg, "--eps", 0.1, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["eps"] == 0.1  # flag wins
    assert report["neck"]["window"] == [-8.0, 8.0]  # file value used


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epz = 0.1\n")
    assert run_cli("orbit", "--config", cfg, "--out", tmp_path) == 2


def test_csv_report_format(tmp_path):
    assert run_cli("glue", "--n", 5, "--eps", 0.05, "--format", "csv", "--out", tmp_path) == 0
    lines = (tmp_path / "glue_report.csv").read_text().splitlines()
    assert lines[0] == "key,value"
    keys = {line.split(",")[0] for line in lines[1:]}
    assert {"b", "Lambda", "gaps.l0_value", "completeness_min"} <= keys
