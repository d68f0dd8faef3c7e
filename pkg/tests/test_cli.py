"""CLI surface: exit codes, output files, determinism, memory guard."""

import json
import subprocess
import sys

import numpy as np
import pytest

from hjsolve.cli import main
from hjsolve.grid import GridField, GridSpec


def run_cli(*argv):
    return main(list(argv))


def test_solve_constant_field_matches_product(tmp_path, capsys):
    rc = run_cli("solve", "--scheme", "s2", "--case", "const:1", "--n", "2",
                 "--m", "40", "--out", str(tmp_path))
    assert rc == 0
    field = GridField.load_binary(tmp_path / "solve_s2_const1_n2_m40.bin")
    xs = field.spec.mesh()
    assert np.max(np.abs(field.values - xs[0] * xs[1])) <= 1e-12
    report = json.loads((tmp_path / "solve_s2_const1_n2_m40.report.json").read_text())
    assert report["scheme"] == "s2"
    assert report["max_band_violation"] <= 1e-12
    assert "wall_time_s" in report


def test_solve_smoke_n3_within_band(tmp_path):
    rc = run_cli("solve", "--scheme", "s1", "--case", "f2", "--n", "3",
                 "--m", "20", "--out", str(tmp_path))
    assert rc == 0
    report = json.loads((tmp_path / "solve_s1_f2_n3_m20.report.json").read_text())
    assert report["max_band_violation"] <= 1e-12
    assert report["bisect_nodes"] > 0


def test_solve_force_bisection_matches_closed_within_band(tmp_path):
    rc = run_cli("solve", "--scheme", "s3", "--case", "f3", "--n", "2",
                 "--m", "60", "--out", str(tmp_path), "--format", "binary")
    assert rc == 0
    rc = run_cli("solve", "--scheme", "s3", "--case", "f3", "--n", "2",
                 "--m", "60", "--out", str(tmp_path / "b"), "--force-bisection")
    assert rc == 0
    closed = GridField.load_binary(tmp_path / "solve_s3_f3_n2_m60.bin")
    bise = GridField.load_binary(tmp_path / "b" / "solve_s3_f3_n2_m60.bin")
    h = 1.0 / 60
    assert np.all(bise.values >= closed.values - 1e-12)
    assert np.all(bise.values <= closed.values * (1.0 + h) + 1e-12)


def test_solve_deterministic_outputs(tmp_path):
    for sub in ("a", "b"):
        rc = run_cli("solve", "--scheme", "s3", "--case", "f2", "--n", "2",
                     "--m", "24", "--out", str(tmp_path / sub), "--format", "both")
        assert rc == 0
    for name in ("solve_s3_f2_n2_m24.bin", "solve_s3_f2_n2_m24.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes()


def test_solve_csv_17_digits(tmp_path):
    run_cli("solve", "--scheme", "s1", "--case", "f2", "--n", "2", "--m", "8",
            "--out", str(tmp_path), "--format", "both")
    field = GridField.load_binary(tmp_path / "solve_s1_f2_n2_m8.bin")
    again = GridField.load_csv(tmp_path / "solve_s1_f2_n2_m8.csv", field.spec)
    assert np.array_equal(field.values, again.values)


def test_solve_field_file_rhs(tmp_path):
    spec = GridSpec(2, 16)
    GridField(spec, np.ones(spec.shape)).save_binary(tmp_path / "rhs.bin")
    rc = run_cli("solve", "--scheme", "s2", "--field-file", str(tmp_path / "rhs.bin"),
                 "--n", "2", "--m", "16", "--out", str(tmp_path))
    assert rc == 0
    field = GridField.load_binary(tmp_path / "solve_s2_rhs_n2_m16.bin")
    xs = spec.mesh()
    assert np.max(np.abs(field.values - xs[0] * xs[1])) <= 1e-12


def test_solve_config_errors(tmp_path, capsys):
    # no rhs at all
    assert run_cli("solve", "--scheme", "s1", "--n", "2", "--m", "8",
                   "--out", str(tmp_path)) == 2
    # unknown scheme
    assert run_cli("solve", "--scheme", "s9", "--case", "f1", "--n", "2",
                   "--m", "8", "--out", str(tmp_path)) == 2
    # memory guard refusal
    assert run_cli("solve", "--scheme", "s1", "--case", "f1", "--n", "2",
                   "--m", "40000", "--mem-cap", "1000000",
                   "--out", str(tmp_path)) == 2
    err = capsys.readouterr().err
    assert "rolling" in err  # the refusal suggests the rolling mode


def test_solve_missing_field_file_is_runtime_error(tmp_path):
    assert run_cli("solve", "--scheme", "s1", "--field-file",
                   str(tmp_path / "nope.bin"), "--n", "2", "--m", "8",
                   "--out", str(tmp_path)) == 1


def test_convergence_markdown_and_csv(tmp_path, capsys):
    rc = run_cli("convergence", "--case", "const:2", "--n", "3", "--max-k", "1",
                 "--schemes", "s2", "--out", str(tmp_path))
    assert rc == 0
    out = capsys.readouterr().out
    assert "Mesh size h" in out
    assert (tmp_path / "convergence_const2_n3.md").exists()

    rc = run_cli("convergence", "--case", "f2", "--n", "2", "--m-list", "10,20,40",
                 "--format", "csv")
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "scheme,n,case,m,h,error,order"
    assert len(lines) == 1 + 3 * 3


def test_convergence_const_s2_errors_within_band(capsys):
    rc = run_cli("convergence", "--case", "const:2", "--n", "3", "--max-k", "1",
                 "--schemes", "s2", "--format", "json")
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    for row in payload["rows"]:
        # u-scale slack of the (1+h) band: n((1+h)^(1/n)-1)*u_max ~ h
        assert row["error"] <= 2.0 * row["h"]


def test_convergence_levelsets(tmp_path, capsys):
    rc = run_cli("convergence", "--case", "f1", "--n", "2", "--m-list", "8,16",
                 "--schemes", "s3", "--emit-levelsets", "--out", str(tmp_path))
    assert rc == 0
    levels = tmp_path / "levelset_s3_f1_n2_m16.csv"
    assert levels.exists()
    assert len(levels.read_text().splitlines()) == 17 * 17


def test_pareto_toy_cloud(tmp_path, capsys):
    cloud = tmp_path / "cloud.csv"
    cloud.write_text("1,2\n2,1\n3,3\n")
    rc = run_cli("pareto", "--input", str(cloud), "--n", "2", "--m", "32",
                 "--case", "const:1", "--out", str(tmp_path))
    assert rc == 0
    rows = (tmp_path / "cloud_ranked.csv").read_text().splitlines()
    fronts = [int(r.split(",")[2]) for r in rows]
    assert fronts == [1, 1, 2]
    report = json.loads((tmp_path / "cloud_pareto.report.json").read_text())
    assert report["fronts"] == 2
    assert report["agreement"] is not None


def test_pareto_empty_input(tmp_path, capsys):
    cloud = tmp_path / "empty.csv"
    cloud.write_text("")
    rc = run_cli("pareto", "--input", str(cloud), "--n", "2", "--m", "8",
                 "--case", "const:1", "--out", str(tmp_path))
    assert rc == 1
    assert "empty" in capsys.readouterr().err


def test_pareto_malformed_line_number(tmp_path, capsys):
    cloud = tmp_path / "bad.csv"
    cloud.write_text("0.1,0.2\n0.5,oops\n")
    rc = run_cli("pareto", "--input", str(cloud), "--n", "2", "--m", "8",
                 "--case", "const:1", "--out", str(tmp_path))
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("HJSOLVE_OUT_DIR", str(tmp_path / "envout"))
    rc = run_cli("solve", "--scheme", "s1", "--case", "f1", "--n", "2", "--m", "8")
    assert rc == 0
    assert (tmp_path / "envout" / "solve_s1_f1_n2_m8.bin").exists()

    monkeypatch.setenv("HJSOLVE_MEM_CAP", "100")
    rc = run_cli("solve", "--scheme", "s1", "--case", "f1", "--n", "2", "--m", "8")
    assert rc == 2  # cap from the environment refuses the full grid


def test_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "hjsolve.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "solve" in proc.stdout and "pareto" in proc.stdout


def test_entry_point_bad_flag_exits_2():
    proc = subprocess.run([sys.executable, "-m", "hjsolve.cli", "solve",
                           "--bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
