"""End-to-end command line runs in subprocesses, including exit codes."""

import subprocess
import sys

import numpy as np
import pytest

from surfdiff.export import read_point_cloud

CONFIG = """
[surface]
kind = sphere

[grid]
h = 0.1
box_min = -2 -2 -2
box_max = 2 2 2

[image]
pattern = stripes
count = 6
size = 256 256

[noise]
model = salt_pepper
fraction = 0.1
seed = 4

[filter]
kind = gaussian
stop_time = 2e-3
"""


def run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "surfdiff.cli", *map(str, args)],
        capture_output=True, text=True, timeout=600,
    )
    return proc


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "run.ini"
    p.write_text(CONFIG)
    return p


def test_band_subcommand(tmp_path, config_path):
    out = tmp_path / "sphere.band"
    proc = run_cli("band", "--config", config_path, "--out", out)
    assert proc.returncode == 0, proc.stderr
    assert "band:" in proc.stdout and "points" in proc.stdout
    head = out.read_bytes()[:64]
    assert head.startswith(b"surfdiff-band ")


def test_map_subcommand(tmp_path, config_path):
    out = tmp_path / "input.ply"
    proc = run_cli("map", "--config", config_path, "--out", out)
    assert proc.returncode == 0, proc.stderr
    pts, col = read_point_cloud(out)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-5)
    # two stripe levels, blended only along the boundaries
    g = col[:, 0]
    at_levels = (np.abs(g - 0.15) < 0.01) | (np.abs(g - 0.85) < 0.01)
    assert at_levels.mean() > 0.8
    assert g.min() > 0.14 and g.max() < 0.86


def test_filter_subcommand_and_metrics(tmp_path, config_path):
    filtered = tmp_path / "filtered.ply"
    diag = tmp_path / "diag.csv"
    proc = run_cli("filter", "--config", config_path, "--out", filtered,
                   "--diagnostics", diag)
    assert proc.returncode == 0, proc.stderr
    assert "filter: kind=gaussian" in proc.stdout
    assert "psnr_noisy_db=" in proc.stdout
    assert "psnr_db=" in proc.stdout
    noisy_db = float(proc.stdout.split("psnr_noisy_db=")[1].split()[0])
    out_db = float(proc.stdout.split("psnr_db=")[1].split()[0])
    # smoothing the replacement noise has to help
    assert out_db > noisy_db
    assert diag.exists() and diag.read_text().startswith("step,")

    clean = tmp_path / "clean.ply"
    proc2 = run_cli("map", "--config", config_path, "--out", clean)
    assert proc2.returncode == 0
    proc3 = run_cli("metrics", filtered, clean)
    assert proc3.returncode == 0, proc3.stderr
    assert proc3.stdout.startswith("psnr_db=")


def test_filter_steps_zero_passthrough(tmp_path, config_path):
    out = tmp_path / "ident.ply"
    proc = run_cli("filter", "--config", config_path, "--out", out,
                   "--steps", 0)
    assert proc.returncode == 0, proc.stderr
    assert "steps=0" in proc.stdout


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[surface]\nkind = dodecahedron\n[grid]\nh = 0.1\n")
    proc = run_cli("band", "--config", bad, "--out", tmp_path / "x.band")
    assert proc.returncode == 1
    assert "config error" in proc.stderr


def test_missing_config_exit_code(tmp_path):
    proc = run_cli("band", "--config", tmp_path / "none.ini",
                   "--out", tmp_path / "x.band")
    assert proc.returncode == 1
    assert "config error" in proc.stderr


def test_io_error_exit_code(tmp_path, config_path):
    proc = run_cli("band", "--config", config_path,
                   "--out", tmp_path / "no" / "dir" / "x.band")
    assert proc.returncode == 3
    assert "io error" in proc.stderr


def test_metrics_size_mismatch(tmp_path, config_path):
    a = tmp_path / "a.ply"
    run_cli("map", "--config", config_path, "--out", a)
    b = tmp_path / "b.ply"
    b.write_text(
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
        "property float y\nproperty float z\nproperty uchar red\n"
        "property uchar green\nproperty uchar blue\nend_header\n"
        "0 0 1 10 10 10\n"
    )
    proc = run_cli("metrics", a, b)
    assert proc.returncode == 1
    assert "differ in size" in proc.stderr


def test_numerical_failure_exit_code(tmp_path):
    # a torus whose tube cannot contain the band radius hits a degenerate
    # closest point query, reported as a numerical failure
    cfg = tmp_path / "deg.ini"
    cfg.write_text("""
[surface]
kind = torus
major_radius = 1.0
minor_radius = 0.15

[grid]
h = 0.1
box_min = -2 -2 -2
box_max = 2 2 2

[filter]
kind = gaussian
stop_time = 1e-3
""")
    proc = run_cli("filter", "--config", cfg, "--out", tmp_path / "x.ply")
    assert proc.returncode == 2
    assert "numerical failure" in proc.stderr


def test_console_script_help():
    proc = subprocess.run(["surfdiff", "--help"], capture_output=True,
                          text=True, timeout=120)
    assert proc.returncode == 0
    for sub in ("band", "map", "filter", "metrics"):
        assert sub in proc.stdout
