"""Render static figures from glsteady CSV/JSON outputs.

Figures never recompute physics: they draw exactly what the solver and the
samplers wrote to disk.  Fonts, sizes and the backend are pinned so that a
rerun on the same toolchain reproduces the image byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIG_WIDTH = 6.4
FIG_RC = {
    "figure.figsize": (FIG_WIDTH, FIG_WIDTH * 0.62),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "lines.markersize": 4,
    "svg.hashsalt": "glfigures",
}

# Columns each figure kind needs in its input CSV (extra columns are fine).
REQUIRED_COLUMNS = {
    "profile": ("x1", "x2", "x3", "m", "tilt", "field"),
    "junction": ("x1", "m_matched", "m_series", "gamma"),
    "reservoir": ("x1", "x2", "x3", "lambda_hat", "stderr", "tilt"),
    "scaling": ("N", "slope_residual", "section_current_spread", "macro_err_max"),
}


class SchemaError(Exception):
    """Input CSV does not carry the columns the figure kind needs."""


@dataclass
class FigureSpec:
    kind: str
    input_csv: str
    output: str
    summary_json: str | None = None
    title: str | None = None


def read_table(path: str) -> dict[str, np.ndarray]:
    """Read a headed CSV into float column arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    data = {}
    for k, name in enumerate(header):
        data[name] = np.array([float(r[k]) for r in rows])
    return data


def validate_columns(kind: str, data: dict[str, np.ndarray], path: str) -> None:
    if kind not in REQUIRED_COLUMNS:
        raise SchemaError(f"unknown figure kind {kind!r}; expected one of {sorted(REQUIRED_COLUMNS)}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in data]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing} for kind {kind!r} "
            f"(found {sorted(data)})"
        )


def _load_summary(spec: FigureSpec) -> dict:
    if spec.summary_json is None:
        return {}
    return json.loads(Path(spec.summary_json).read_text())


def _sectional_means(data, column):
    xs = np.unique(data["x1"])
    vals = np.array([data[column][data["x1"] == x].mean() for x in xs])
    return xs, vals


def _plot_profile(ax, data, summary):
    xs, m = _sectional_means(data, "m")
    _, tilt = _sectional_means(data, "tilt")
    _, field = _sectional_means(data, "field")
    ax.plot(xs, m, "o-", color="tab:blue", label="stationary profile")
    ax.plot(xs, tilt, "--", color="tab:gray", label="chemical-potential tilt")
    ax.plot(xs, tilt + field, ":", color="tab:red", label="tilt + bulk field")
    ax.axvline(-0.5, color="k", lw=0.6, alpha=0.5)
    ax.set_xlabel("x1")
    ax.set_ylabel("magnetization")
    ax.legend(loc="best")


def _plot_junction(ax, data, summary):
    xs = data["x1"]
    ax.plot(xs, data["m_matched"], "o-", color="tab:blue", label="matched layer")
    ax.plot(xs, data["m_series"], "x", color="tab:orange", label="series oracle")
    gamma = summary.get("gamma", float(data["gamma"][0]))
    m0 = summary.get("m0")
    if m0 is None:
        at0 = np.flatnonzero(xs == 0)
        m0 = float(data["m_matched"][at0[0]]) if at0.size else None
    if m0 is not None:
        grid = np.linspace(0.0, float(xs.max()), 200)
        ax.plot(
            grid,
            m0 * np.exp(-gamma * grid),
            "-",
            color="tab:green",
            alpha=0.7,
            label=rf"$m_0\,e^{{-\gamma x_1}}$, $\gamma$={gamma:.4f}",
        )
    ax.axhline(0.0, color="k", lw=0.6, alpha=0.5)
    ax.set_xlabel("x1")
    ax.set_ylabel("junction layer")
    ax.legend(loc="best")


def _plot_reservoir(ax, data, summary):
    axis = (data["x2"] == 0) & (data["x3"] == 0)
    xs = data["x1"][axis]
    order = np.argsort(xs)
    ax.errorbar(
        xs[order],
        data["lambda_hat"][axis][order],
        yerr=3.0 * data["stderr"][axis][order],
        fmt="o",
        color="tab:blue",
        capsize=2,
        label="walk estimate (3 s.e.)",
    )
    ax.plot(xs[order], data["tilt"][axis][order], "--", color="tab:gray", label="linear tilt")
    ax.set_xlabel("x1")
    ax.set_ylabel("boundary chemical potential")
    ax.legend(loc="best")


def _plot_scaling(ax, data, summary):
    n = data["N"]
    ax.loglog(n, data["slope_residual"], "o-", color="tab:blue", label="slope residual")
    ax.loglog(n, data["macro_err_max"], "s-", color="tab:orange", label="macroscopic gap")
    spread = data["section_current_spread"]
    if np.all(spread > 0):
        ax.loglog(n, spread, "^-", color="tab:green", label="section-current spread")
    ax.set_xlabel("N")
    ax.set_ylabel("error")
    ax.legend(loc="best")


_PLOTTERS = {
    "profile": _plot_profile,
    "junction": _plot_junction,
    "reservoir": _plot_reservoir,
    "scaling": _plot_scaling,
}


def render(spec: FigureSpec) -> str:
    """Validate the inputs and write the figure; returns the output path."""
    data = read_table(spec.input_csv)
    validate_columns(spec.kind, data, spec.input_csv)
    summary = _load_summary(spec)
    with plt.rc_context(FIG_RC):
        fig, ax = plt.subplots()
        _PLOTTERS[spec.kind](ax, data, summary)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata={"Software": "glfigures"})
        plt.close(fig)
    return str(out)
