"""Rendering tests on crafted inputs: schemas, determinism, image output."""

import numpy as np
import pytest
from PIL import Image

from glfigures import FigureSpec, SchemaError, render
from glfigures.cli import main
from glfigures.render import FIG_RC, read_table, validate_columns


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


@pytest.fixture
def profile_csv(tmp_path):
    path = tmp_path / "profile.csv"
    rows = []
    for x1 in range(-4, 4):
        for x2 in (-1, 0):
            m = -0.5 if x1 < 0 else 0.2
            rows.append((x1, x2, 0, m, -0.05 * x1, -1.0 if x1 < 0 else 0.0))
    write_csv(path, ["x1", "x2", "x3", "m", "tilt", "field"], rows)
    return path


@pytest.fixture
def junction_csv(tmp_path):
    path = tmp_path / "junction.csv"
    gamma, m0 = 0.9624236501190353, -0.27639320225002095
    rows = []
    for x1 in range(-10, 11):
        m = m0 * np.exp(-gamma * x1) if x1 >= 0 else -1.0 - m0 * np.exp(-gamma * (-x1 - 1))
        rows.append((x1, m, m, gamma))
    write_csv(path, ["x1", "m_matched", "m_series", "gamma"], rows)
    return path


def test_read_and_validate(profile_csv):
    data = read_table(profile_csv)
    validate_columns("profile", data, str(profile_csv))
    with pytest.raises(SchemaError, match="junction"):
        validate_columns("junction", data, str(profile_csv))
    with pytest.raises(SchemaError, match="unknown figure kind"):
        validate_columns("surface", data, str(profile_csv))


def test_render_profile(tmp_path, profile_csv):
    out = render(FigureSpec("profile", str(profile_csv), str(tmp_path / "p.png")))
    with Image.open(out) as img:
        assert img.size == (
            round(FIG_RC["figure.figsize"][0] * FIG_RC["savefig.dpi"]),
            round(FIG_RC["figure.figsize"][1] * FIG_RC["savefig.dpi"]),
        )


def test_render_junction_with_and_without_summary(tmp_path, junction_csv):
    out1 = render(FigureSpec("junction", str(junction_csv), str(tmp_path / "j1.png")))
    summary = tmp_path / "summary.json"
    summary.write_text('{"gamma": 0.9624236501190353, "m0": -0.27639320225002095}')
    out2 = render(
        FigureSpec("junction", str(junction_csv), str(tmp_path / "j2.png"), str(summary))
    )
    for out in (out1, out2):
        with Image.open(out) as img:
            assert img.size[0] > 0


def test_render_reservoir_and_scaling(tmp_path):
    res = tmp_path / "lambda_star.csv"
    rows = [
        (x1, 0, 0, -x1 / 8 + 0.01, 0.007, -x1 / 8)
        for x1 in range(-7, 8)
    ]
    write_csv(res, ["x1", "x2", "x3", "lambda_hat", "stderr", "tilt"], rows)
    render(FigureSpec("reservoir", str(res), str(tmp_path / "r.png")))

    sc = tmp_path / "scaling.csv"
    write_csv(
        sc,
        ["N", "slope_residual", "section_current_spread", "macro_err_max"],
        [(4, 0.29, 2e-13, 0.10), (8, 0.21, 1e-13, 0.05), (16, 0.12, 1e-13, 0.02)],
    )
    render(FigureSpec("scaling", str(sc), str(tmp_path / "s.png")))


def test_render_is_deterministic(tmp_path, junction_csv):
    a = render(FigureSpec("junction", str(junction_csv), str(tmp_path / "a.png")))
    b = render(FigureSpec("junction", str(junction_csv), str(tmp_path / "b.png")))
    with open(a, "rb") as fa, open(b, "rb") as fb:
        assert fa.read() == fb.read()


def test_cli_render_and_schema_exit(tmp_path, profile_csv, capsys):
    out = tmp_path / "fig.png"
    assert main(["render", "--kind", "profile", "--in", str(profile_csv), "--out", str(out)]) == 0
    assert out.exists()

    code = main(["render", "--kind", "junction", "--in", str(profile_csv), "--out", str(out)])
    assert code == 2
    err = capsys.readouterr().err
    assert "m_matched" in err  # the diagnostic names the missing columns

    assert main(["render", "--kind", "profile", "--in", str(tmp_path / "nope.csv"), "--out", str(out)]) == 2
