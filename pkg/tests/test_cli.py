import shutil
import subprocess

import pytest

from meso.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from meso.milp import read_mps
from meso.scheduler import read_schedule_csv


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def s1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("s1")
    assert run("run", "--scenario", "s1", "--output-dir", out) == EXIT_OK
    return out


def test_run_writes_reports(s1_run):
    names = sorted(p.name for p in s1_run.iterdir())
    assert names == ["costs_s1.csv", "pumps_s1.txt", "schedule_s1.csv"]
    cols = read_schedule_csv(s1_run / "schedule_s1.csv")
    assert len(cols["hour"]) == 24
    assert (s1_run / "pumps_s1.txt").read_text().startswith("MP1 111000")


def test_identical_runs_identical_files(s1_run, tmp_path):
    assert run("run", "--scenario", "s1", "--output-dir", tmp_path) == EXIT_OK
    for f in s1_run.iterdir():
        assert (tmp_path / f.name).read_bytes() == f.read_bytes(), f.name


def test_validate_accepts_solver_output(s1_run):
    assert run("validate", "--scenario", "s1", "--schedule", s1_run / "schedule_s1.csv",
               "--costs", s1_run / "costs_s1.csv") == EXIT_OK


def test_validate_flags_tampering(s1_run, tmp_path):
    lines = (s1_run / "schedule_s1.csv").read_text().splitlines()
    head = lines[0].split(",")
    j = head.index("grid.peb")
    row = lines[5].split(",")
    row[j] = str(float(row[j]) + 40.0)
    lines[5] = ",".join(row)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert run("validate", "--scenario", "s1", "--schedule", bad) == EXIT_INFEASIBLE


def test_export_mps(tmp_path):
    assert run("export-mps", "--scenario", "s2,s4", "--output-dir", tmp_path) == EXIT_OK
    p = read_mps(tmp_path / "model_s4.mps")
    assert p.num_integer > 0
    assert (tmp_path / "model_s4.mps.names").is_file()
    assert not (tmp_path / "schedule_s4.csv").exists()


@pytest.mark.parametrize("argv", [
    ["run", "--config", "/nonexistent/c.yaml"],
    ["run", "--gap", "1.5"],
    ["run", "--gap", "0"],
    ["run", "--nodes", "0"],
    ["run", "--scenario", "s9"],
    ["validate", "--scenario", "s1"],
    ["validate", "--scenario", "s1,s2", "--schedule", "x.csv"],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv, tmp_path):
    assert run(*argv, *([] if not argv or argv[0] == "frobnicate" else ["--output-dir", tmp_path])) == EXIT_USAGE


def test_bad_config_content_is_usage_error(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("units: [1, 2\n")
    assert run("export-mps", "--config", cfg, "--output-dir", tmp_path) == EXIT_USAGE


def test_errors_go_to_stderr(capsys):
    run("run", "--config", "/nonexistent/c.yaml")
    out = capsys.readouterr()
    assert out.out == "" and "usage:" in out.err


@pytest.mark.skipif(shutil.which("meso") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["meso", "export-mps", "--scenario", "s1", "--output-dir", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == ""
    assert (tmp_path / "model_s1.mps").is_file()
    assert read_mps(tmp_path / "model_s1.mps").num_vars > 0
