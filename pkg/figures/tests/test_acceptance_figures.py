"""Acceptance for the figures package, on real glsteady CLI outputs.

The solver package is consumed only through its command line: these tests
shell out to ``python -m glsteady`` and read back the files it writes.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from glfigures import FigureSpec, render
from glfigures.render import read_table


def run_glsteady(args):
    proc = subprocess.run(
        [sys.executable, "-m", "glsteady", *args], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def junction_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("junction")
    run_glsteady(["junction", "--J", "1", "--h", "-1", "--out", str(out)])
    return out


@pytest.fixture(scope="module")
def solve_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    run_glsteady(
        ["solve", "--N", "8", "--J", "1", "--beta", "1", "--lambda", "0.5", "--h", "-1", "--out", str(out)]
    )
    return out


def test_junction_figure_recovers_decay_rate(tmp_path, junction_run):
    csv_path = junction_run / "junction.csv"
    summary = json.loads((junction_run / "summary.json").read_text())
    out = render(
        FigureSpec("junction", str(csv_path), str(tmp_path / "junction.png"), str(junction_run / "summary.json"))
    )
    assert (tmp_path / "junction.png").exists()

    # exponential regression on the rendered dataset: ln|m| vs x1, x1 >= 0
    data = read_table(csv_path)
    pos = data["x1"] >= 0
    slope, _ = np.polyfit(data["x1"][pos], np.log(np.abs(data["m_matched"][pos])), 1)
    assert abs(-slope - summary["gamma"]) < 1e-3


def test_profile_figure_two_plateau_shape(tmp_path, solve_run):
    csv_path = solve_run / "profile.csv"
    render(FigureSpec("profile", str(csv_path), str(tmp_path / "profile.png")))
    assert (tmp_path / "profile.png").exists()

    data = read_table(csv_path)
    lam, h, n = 0.5, -1.0, 8
    xs = np.unique(data["x1"])
    means = np.array([data["m"][data["x1"] == x].mean() for x in xs])
    left_end = means[xs == -2 * n][0]
    right_end = means[xs == 2 * n - 1][0]
    # plateau ends sit at the reservoir values up to one tilt step 2*lam/(4N+1)
    step = 2 * lam / (4 * n + 1)
    assert abs(left_end - (lam + h)) < step + 0.005
    assert abs(right_end - (-lam)) < step + 0.005
    # the junction jump between the plateaus is the uphill signature
    jump = means[xs == 0][0] - means[xs == -1][0]
    assert jump > 0.3


def test_reservoir_figure_from_cli_output(tmp_path):
    out = tmp_path / "res"
    run_glsteady(
        ["reservoir", "--N", "4", "--M", "1", "--lambda", "1", "--samples", "2000", "--seed", "1", "--out", str(out)]
    )
    png = render(FigureSpec("reservoir", str(out / "lambda_star.csv"), str(tmp_path / "res.png")))
    assert (tmp_path / "res.png").exists()


def test_scaling_figure_from_cli_output(tmp_path):
    out = tmp_path / "fick"
    run_glsteady(["fick", "--n-list", "4,8", "--out", str(out)])
    render(FigureSpec("scaling", str(out / "scaling.csv"), str(tmp_path / "scaling.png")))
    assert (tmp_path / "scaling.png").exists()
