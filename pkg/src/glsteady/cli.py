"""Batch command-line front end.

Subcommands drive the library and serialize results as CSV/JSON:

* ``solve``      exact stationary profile, currents, covariance samples
* ``junction``   infinite-volume junction layer (matched vs series oracle)
* ``simulate``   Langevin trajectory cross-check against the exact state
* ``reservoir``  random-walk estimates of the reservoir harmonic function
* ``fick``       scaling table over a list of system sizes

Configuration comes from ``key=value`` files plus flag overrides (flags
win); every run writes a ``manifest.json`` echoing the fully resolved
configuration, and re-running from a manifest reproduces the run exactly.
Floats are serialized with 17 significant digits, so numeric outputs
round-trip losslessly and reruns are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 statistical-validity failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, junction, reservoirs, solver
from .lattice import build_channel_domain, build_darken_domain
from .model import ModelParams, assemble


class ConfigError(Exception):
    pass


# -- configuration plumbing -------------------------------------------------

# key -> (type, default); None defaults mean "decided downstream".
_COMMON = {"seed": (int, 0), "threads": (int, 1), "out": (str, None)}

_SCHEMAS = {
    "solve": {
        "geometry": (str, "darken"),
        "N": (int, 4),
        "M": (int, 1),
        "J": (float, 1.0),
        "beta": (float, 1.0),
        "lambda": (float, 0.0),
        "h": (float, 0.0),
        "phi_bar_left": (float, None),
        "phi_bar_right": (float, None),
        "tol": (float, 1e-12),
        **_COMMON,
    },
    "junction": {
        "J": (float, 1.0),
        "h": (float, -1.0),
        "x1_min": (int, -10),
        "x1_max": (int, 10),
        "n_max": (int, 60),
        **_COMMON,
    },
    "simulate": {
        "N": (int, 1),
        "J": (float, 1.0),
        "beta": (float, 1.0),
        "lambda": (float, 1.0),
        "h": (float, -1.0),
        "dt": (float, 1e-3),
        "steps": (int, 200_000),
        "burn_in": (int, 50_000),
        "thin": (int, 1),
        "tol": (float, 1e-12),
        **_COMMON,
    },
    "reservoir": {
        "N": (int, 8),
        "M": (int, 2),
        "lambda": (float, 1.0),
        "samples": (int, 20_000),
        "eps": (float, 0.1),
        "far_offset": (int, None),
        "step_cap": (int, reservoirs.DEFAULT_STEP_CAP),
        **_COMMON,
    },
    "fick": {
        "n_list": (str, "4,8,16"),
        "J": (float, 1.0),
        "beta": (float, 1.0),
        "lambda": (float, 1.0),
        "h": (float, -1.0),
        "tol": (float, 1e-12),
        **_COMMON,
    },
}


def _parse_config_file(path: str) -> dict:
    """Read a key=value config file, or the config block of a manifest."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return dict(data.get("config", data))
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _coerce(key: str, value, typ):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "null", "")):
        return None
    try:
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc


def _resolve(command: str, args: argparse.Namespace) -> dict:
    schema = _SCHEMAS[command]
    file_cfg = _parse_config_file(args.config) if args.config else {}
    unknown = set(file_cfg) - set(schema) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg = {}
    for key, (typ, default) in schema.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            cfg[key] = _coerce(key, flag_value, typ)
        elif key in file_cfg:
            cfg[key] = _coerce(key, file_cfg[key], typ)
        else:
            cfg[key] = default
    if cfg["out"] is None:
        cfg["out"] = f"{command}_out"
    return cfg


# -- serialization helpers ----------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _write_manifest(outdir: Path, command: str, cfg: dict) -> None:
    write_json(outdir / "manifest.json", {"command": command, "config": cfg})


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -----------------------------------------------------------------


def _build_model(cfg: dict):
    geometry = cfg.get("geometry", "darken")
    try:
        if geometry == "darken":
            domain = build_darken_domain(cfg["N"])
        elif geometry == "channel":
            domain = build_channel_domain(cfg["N"], cfg["M"])
        else:
            raise ConfigError(f"unknown geometry {geometry!r}")
        params = ModelParams(
            J=cfg["J"],
            beta=cfg["beta"],
            h=cfg["h"],
            lam=cfg["lambda"],
            phi_bar_left=cfg.get("phi_bar_left"),
            phi_bar_right=cfg.get("phi_bar_right"),
        )
        return assemble(domain, params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _axis_sites(domain) -> np.ndarray:
    if domain.kind == "darken":
        xs = np.arange(-2 * domain.N, 2 * domain.N, dtype=np.int64)
    else:
        xs = np.arange(-(domain.N - 1), domain.N, dtype=np.int64)
    pts = np.zeros((xs.size, 3), dtype=np.int64)
    pts[:, 0] = xs
    return pts


def _bulk_axis_bond_mask(domain, margin: float | None = None) -> np.ndarray:
    """On-axis e1 bonds farther than ``margin`` from the faces and junction.

    Defaults to a log N margin, which suits the unscaled slope-vs-current
    comparison.  The N-scaled slope criterion needs a wider, decay-rate
    aware margin (see ``cmd_fick``): the junction layer contributes
    ``N exp(-gamma d)`` there, so d must exceed ``2 log(N) / gamma`` for
    that term to shrink with N.
    """
    n = domain.N
    if margin is None:
        margin = math.log(max(n, 2))
    xs = np.arange(-2 * n, 2 * n - 1)  # bond start coordinates
    dist = np.minimum.reduce(
        [np.abs(xs + 2 * n), np.abs(xs), np.abs(xs + 1), np.abs(xs - (2 * n - 1))]
    )
    return dist > margin


def cmd_solve(cfg: dict) -> int:
    outdir = _outdir(cfg)
    model = _build_model(cfg)
    state = solver.solve(model, tol=cfg["tol"])
    dom = model.domain
    residual = float(np.max(np.abs(model.gradient(state.mean.values))))

    core = dom.core
    write_csv(
        outdir / "profile.csv",
        ["x1", "x2", "x3", "m", "tilt", "field"],
        zip(
            core[:, 0],
            core[:, 1],
            core[:, 2],
            state.mean.values,
            model.tilt,
            model.bulk_field,
        ),
    )

    bi, bj, axis, values = solver.bond_current_table(state)
    dirs = np.zeros((bi.size, 3), dtype=np.int64)
    dirs[np.arange(bi.size), axis] = 1
    write_csv(
        outdir / "currents.csv",
        ["x1", "x2", "x3", "dx", "dy", "dz", "current"],
        zip(
            core[bi, 0],
            core[bi, 1],
            core[bi, 2],
            dirs[:, 0],
            dirs[:, 1],
            dirs[:, 2],
            values,
        ),
    )

    axis_pts = _axis_sites(dom)
    stride = max(1, math.ceil(len(axis_pts) / 33))
    sample_pts = axis_pts[::stride]
    center = (0, 0, 0)
    cov_rows = []
    for pt in sample_pts:
        site = tuple(int(v) for v in pt)
        cov_rows.append((*site, *site, solver.covariance_entry(state, site, site)))
    center_row = solver.covariance_row(state, center)
    for pt in sample_pts:
        site = tuple(int(v) for v in pt)
        cov_rows.append((*center, *site, center_row.at(site)))
    write_csv(
        outdir / "covariance.csv",
        ["x1", "x2", "x3", "y1", "y2", "y3", "c"],
        cov_rows,
    )

    # section currents (mean per section of e1-bond currents)
    e1 = axis == 0
    sec_x1 = core[bi[e1], 0]
    sec_vals = values[e1]
    xs = np.unique(sec_x1)
    sec_means = np.array([sec_vals[sec_x1 == x].mean() for x in xs])
    summary = {
        "geometry": dom.kind,
        "N": dom.N,
        "M": dom.M,
        "n_sites": dom.n_sites,
        "max_residual": residual,
        "section_current_mean": float(sec_means.mean()) if sec_means.size else 0.0,
        "section_current_spread": float(np.ptp(sec_means)) if sec_means.size else 0.0,
    }
    if dom.kind == "darken":
        window = solver.uphill_window(state)
        summary["uphill_window"] = {
            "found": window.found,
            "x1_lo": window.x1_lo,
            "x1_hi": window.x1_hi,
        }
        axis_idx = dom.core_index(axis_pts)
        m_axis = state.mean.values[axis_idx]
        slopes = np.diff(m_axis)
        currents_axis = (
            state.gradient_untilted[axis_idx[:-1]] - state.gradient_untilted[axis_idx[1:]]
        )
        bulk = _bulk_axis_bond_mask(dom)
        if np.any(bulk):
            summary["fick_bulk_max_abs_residual"] = float(
                np.max(np.abs(slopes[bulk] + currents_axis[bulk]))
            )
        else:
            summary["fick_bulk_max_abs_residual"] = None
    else:
        summary["uphill_window"] = None
    write_json(outdir / "summary.json", summary)
    _write_manifest(outdir, "solve", cfg)
    return 0


def cmd_junction(cfg: dict) -> int:
    outdir = _outdir(cfg)
    if cfg["J"] <= 0 or cfg["h"] >= 0:
        raise ConfigError("junction layer requires J > 0 and h < 0")
    if cfg["x1_min"] > cfg["x1_max"]:
        raise ConfigError("x1_min must not exceed x1_max")
    layer = junction.junction_profile(cfg["J"], cfg["h"])
    xs = np.arange(cfg["x1_min"], cfg["x1_max"] + 1)
    matched = layer.profile(xs)
    series = np.array(
        [junction.junction_series_oracle(cfg["J"], cfg["h"], int(x), cfg["n_max"]) for x in xs]
    )
    write_csv(
        outdir / "junction.csv",
        ["x1", "m_matched", "m_series", "gamma"],
        zip(xs, matched, series, np.full(xs.size, layer.gamma)),
    )
    write_json(
        outdir / "summary.json",
        {
            "J": cfg["J"],
            "h": cfg["h"],
            "gamma": layer.gamma,
            "gamma_closed_form": junction.gamma_closed_form(cfg["J"]),
            "m0": layer.m0,
            "n_max": cfg["n_max"],
            "max_series_gap": float(np.max(np.abs(matched - series))),
            "series_truncation_bound": junction.series_truncation_bound(
                cfg["J"], cfg["h"], cfg["n_max"]
            ),
        },
    )
    _write_manifest(outdir, "junction", cfg)
    return 0


def cmd_simulate(cfg: dict) -> int:
    outdir = _outdir(cfg)
    model = _build_model({**cfg, "geometry": "darken", "M": 1})
    try:
        sim_cfg = dynamics.SimulationConfig(
            dt=cfg["dt"],
            n_steps=cfg["steps"],
            burn_in=cfg["burn_in"],
            seed=cfg["seed"],
            thin=cfg["thin"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    B, _, _ = dynamics.build_drift(model)
    dt_max = dynamics.gershgorin_dt_max(B)
    if cfg["dt"] >= dt_max:
        raise ConfigError(
            f"dt={cfg['dt']:g} violates the stability bound; choose dt < {dt_max:.3e}"
        )
    trace = dynamics.simulate(model, sim_cfg)
    state = solver.solve(model, tol=cfg["tol"])

    core = model.domain.core
    exact = state.mean.values
    site_z = (trace.site_mean - exact) / trace.site_stderr
    write_csv(
        outdir / "trace_sites.csv",
        ["x1", "x2", "x3", "mean", "stderr", "exact", "z"],
        zip(core[:, 0], core[:, 1], core[:, 2], trace.site_mean, trace.site_stderr, exact, site_z),
    )

    dom = model.domain
    dirs = np.zeros((dom.bonds_i.size, 3), dtype=np.int64)
    dirs[np.arange(dom.bonds_i.size), dom.bond_axis] = 1
    rows = []
    z_values = []
    for k in range(dom.bonds_i.size):
        i, j = int(dom.bonds_i[k]), int(dom.bonds_j[k])
        est_samples = trace.batch_grad[:, i] - trace.batch_grad[:, j]
        value = float(est_samples.mean())
        stderr = float(est_samples.std(ddof=1) / np.sqrt(est_samples.size))
        theory = float(model.tilt[i] - model.tilt[j])
        z = (value - theory) / stderr if stderr > 0 else 0.0
        z_values.append(z)
        rows.append((*core[i], *dirs[k], value, stderr, theory, z))
    write_csv(
        outdir / "trace_bonds.csv",
        ["x1", "x2", "x3", "dx", "dy", "dz", "current", "stderr", "theory", "z"],
        rows,
    )

    z_values = np.asarray(z_values)
    summary = {
        "n_samples": trace.n_samples,
        "lyapunov_residual": dynamics.lyapunov_residual(model),
        "mean_equation_residual": dynamics.mean_equation_residual(model, state.mean),
        "max_site_abs_z": float(np.max(np.abs(site_z))),
        "frac_bond_abs_z_lt_3": float(np.mean(np.abs(z_values) < 3.0)),
        "dt_max": dt_max,
    }
    write_json(outdir / "summary.json", summary)
    _write_manifest(outdir, "simulate", cfg)
    return 0


def cmd_reservoir(cfg: dict) -> int:
    outdir = _outdir(cfg)
    try:
        domain = build_channel_domain(cfg["N"], cfg["M"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lam = cfg["lambda"]
    far = (
        cfg["far_offset"]
        if cfg["far_offset"] is not None
        else reservoirs.default_far_offset(cfg["M"], cfg["eps"])
    )
    axis = _axis_sites(domain)
    rows = []
    estimates = {}
    for pt in axis:
        site = tuple(int(v) for v in pt)
        p_left, p_right = reservoirs.estimate_absorption(
            domain,
            site,
            cfg["samples"],
            seed=cfg["seed"],
            far_offset=far,
            step_cap=cfg["step_cap"],
        )
        est = reservoirs.MCEstimate(
            lam * (p_left.value - p_right.value),
            2.0 * abs(lam) * p_left.stderr,
            p_left.n_samples,
            p_left.n_capped,
        )
        tilt = -lam * site[0] / domain.N
        estimates[site[0]] = est
        rows.append(
            (
                *site,
                est.value,
                est.stderr,
                est.n_samples,
                est.n_capped,
                p_left.value,
                p_right.value,
                tilt,
                far,
            )
        )
    write_csv(
        outdir / "lambda_star.csv",
        [
            "x1",
            "x2",
            "x3",
            "lambda_hat",
            "stderr",
            "n_samples",
            "n_capped",
            "p_left",
            "p_right",
            "tilt",
            "far_offset",
        ],
        rows,
    )

    antisym_z = []
    for x1 in range(1, domain.N):
        a, b = estimates[x1], estimates[-x1]
        se = math.sqrt(a.stderr**2 + b.stderr**2)
        if se > 0:
            antisym_z.append(abs(a.value + b.value) / se)
    devs = [abs(estimates[x1].value + lam * x1 / domain.N) for x1 in estimates]
    capped_frac = max(est.capped_fraction for est in estimates.values())
    summary = {
        "N": domain.N,
        "M": domain.M,
        "lambda": lam,
        "far_offset": far,
        "samples_per_site": cfg["samples"],
        "max_antisymmetry_z": float(max(antisym_z)) if antisym_z else 0.0,
        "max_tilt_abs_dev": float(max(devs)),
        "max_stderr": float(max(est.stderr for est in estimates.values())),
        "max_capped_fraction": float(capped_frac),
    }
    write_json(outdir / "summary.json", summary)
    _write_manifest(outdir, "reservoir", cfg)
    if capped_frac > reservoirs.CAPPED_FRACTION_LIMIT:
        raise reservoirs.StatisticalValidityError(
            f"capped-walk fraction {capped_frac:.2%} exceeds "
            f"{reservoirs.CAPPED_FRACTION_LIMIT:.2%}; raise step_cap"
        )
    return 0


def cmd_fick(cfg: dict) -> int:
    outdir = _outdir(cfg)
    try:
        n_values = [int(s) for s in str(cfg["n_list"]).split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad n_list {cfg['n_list']!r}") from exc
    if not n_values:
        raise ConfigError("n_list is empty")
    lam, h = cfg["lambda"], cfg["h"]
    gamma = junction.solve_gamma(cfg["J"])
    r_samples = (-1.5, -1.0, -0.5, 0.5, 1.0, 1.5)
    rows = []
    slope_residuals = []
    for n in n_values:
        model = _build_model(
            {
                "geometry": "darken",
                "N": n,
                "M": 1,
                "J": cfg["J"],
                "beta": cfg["beta"],
                "lambda": lam,
                "h": h,
                "phi_bar_left": None,
                "phi_bar_right": None,
            }
        )
        state = solver.solve(model, tol=cfg["tol"])
        dom = model.domain
        axis_pts = _axis_sites(dom)
        axis_idx = dom.core_index(axis_pts)
        m_axis = state.mean.values[axis_idx]
        slopes = np.diff(m_axis)
        margin = max(math.log(max(n, 2)), 2.0 * math.log(max(n, 2)) / gamma)
        bulk = _bulk_axis_bond_mask(dom, margin)
        if not np.any(bulk):
            bulk = _bulk_axis_bond_mask(dom)
        scaled = n * slopes[bulk]
        slope_scaled = float(scaled.mean())
        slope_residual = float(np.max(np.abs(scaled + lam / 2.0)))
        slope_residuals.append(slope_residual)

        bi, bj, axis, values = solver.bond_current_table(state)
        e1 = axis == 0
        sec_x1 = dom.core[bi[e1], 0]
        sec_vals = values[e1]
        xs = np.unique(sec_x1)
        sec_means = np.array([sec_vals[sec_x1 == x].mean() for x in xs])

        macro_errs = []
        for r in r_samples:
            x1 = math.floor(n * r)
            m_val = state.mean.at((x1, 0, 0))
            macro_errs.append(abs(m_val - junction.macroscopic_profile(r, lam, h)))
        rows.append(
            (
                n,
                slope_scaled,
                -lam / 2.0,
                slope_residual,
                float(sec_means.mean()),
                float(np.ptp(sec_means)),
                float(max(macro_errs)),
            )
        )
    write_csv(
        outdir / "scaling.csv",
        [
            "N",
            "slope_scaled",
            "slope_target",
            "slope_residual",
            "section_current_mean",
            "section_current_spread",
            "macro_err_max",
        ],
        rows,
    )
    write_json(
        outdir / "summary.json",
        {
            "n_values": n_values,
            "slope_residuals": slope_residuals,
            "slope_residuals_decreasing": all(
                b <= a for a, b in zip(slope_residuals, slope_residuals[1:])
            ),
            "lambda": lam,
            "h": h,
        },
    )
    _write_manifest(outdir, "fick", cfg)
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "junction": cmd_junction,
    "simulate": cmd_simulate,
    "reservoir": cmd_reservoir,
    "fick": cmd_fick,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glsteady",
        description="Steady states of boundary-driven quadratic lattice field models",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _SCHEMAS.items():
        sp = sub.add_parser(command)
        sp.add_argument("--config", help="key=value config file or a manifest.json")
        for key, (typ, _default) in schema.items():
            flag = "--" + key.replace("_", "-")
            if typ is str:
                sp.add_argument(flag, dest=key, default=None)
            else:
                sp.add_argument(flag, dest=key, type=typ, default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args.command, args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except reservoirs.StatisticalValidityError as exc:
        print(f"statistical validity failure: {exc}", file=sys.stderr)
        return 4
    except (solver.SolverError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
