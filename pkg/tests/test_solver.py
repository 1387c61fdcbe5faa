"""Solver tests: dense oracles, covariance bounds, currents, uphill window."""

import numpy as np
import pytest

from glsteady import junction, solver
from glsteady.lattice import build_channel_domain, build_darken_domain
from glsteady.model import ModelParams, ScalarField, assemble

from test_model import make_single_site_model


def random_params(rng, h_zero=False):
    return ModelParams(
        J=float(rng.uniform(0.1, 2.0)),
        beta=float(rng.uniform(0.5, 2.0)),
        h=0.0 if h_zero else float(-rng.uniform(0.0, 2.0)),
        lam=float(rng.uniform(-1.0, 1.0)),
    )


def test_single_site_mean():
    model = make_single_site_model(D=7.0, b=-0.4)
    m = solver.stationary_mean(model)
    assert m.values[0] == pytest.approx(-0.4 / 7.0, rel=1e-14)


def test_equilibrium_mean_is_zero():
    dom = build_darken_domain(2)
    model = assemble(
        dom,
        ModelParams(J=1.0, beta=1.0, h=0.0, lam=0.0, phi_bar_left=0.0, phi_bar_right=0.0),
    )
    m = solver.stationary_mean(model)
    assert np.max(np.abs(m.values)) == 0.0


def test_iterative_matches_dense_oracle(rng):
    for dom in (build_darken_domain(1), build_darken_domain(2), build_channel_domain(3, 1)):
        for _ in range(3):
            model = assemble(dom, random_params(rng))
            it = solver.stationary_mean(model, tol=1e-12).values
            direct = solver.dense_mean(model)
            assert np.max(np.abs(it - direct)) < 1e-10


def test_solver_reports_nonconvergence():
    dom = build_darken_domain(1)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=1.0))
    with pytest.raises(solver.SolverError, match="residual"):
        solver.stationary_mean(model, tol=1e-12, max_iters=2)
    with pytest.raises(ValueError):
        solver.stationary_mean(model, tol=-1.0)


def test_single_site_covariance():
    model = make_single_site_model(D=7.0, b=0.0, beta=1.0)
    state = solver.solve(model)
    assert solver.covariance_entry(state, (0, 0, 0), (0, 0, 0)) == pytest.approx(
        1.0 / 14.0, rel=1e-12
    )


def test_covariance_matches_dense_inverse(rng):
    dom = build_darken_domain(1)
    model = assemble(dom, random_params(rng))
    state = solver.solve(model)
    dense = solver.dense_covariance(model)
    for i in range(model.n):
        x = tuple(int(v) for v in dom.core[i])
        row = solver.covariance_row(state, x).values
        assert np.max(np.abs(row - dense[i])) < 1e-12


def test_covariance_symmetry(rng):
    dom = build_darken_domain(1)
    model = assemble(dom, random_params(rng))
    state = solver.solve(model)
    picks = rng.integers(0, model.n, size=(8, 2))
    for i, j in picks:
        x = tuple(int(v) for v in dom.core[i])
        y = tuple(int(v) for v in dom.core[j])
        cxy = solver.covariance_entry(state, x, y)
        cyx = solver.covariance_entry(state, y, x)
        # each row is truncated at a 1e-12 tail bound
        assert cxy == pytest.approx(cyx, abs=4e-12)


def test_covariance_row_sums_bounded(rng):
    for dom in (build_darken_domain(1), build_darken_domain(2)):
        for params in (ModelParams(J=1.0, beta=1.0, h=-1.0, lam=0.5), random_params(rng)):
            model = assemble(dom, params)
            state = solver.solve(model)
            bound = 1.0 / (2.0 * params.beta)
            for i in range(model.n):
                x = tuple(int(v) for v in dom.core[i])
                row_sum = float(solver.covariance_row(state, x).values.sum())
                assert row_sum <= bound + 1e-10


def test_currents_match_tilt_drops():
    dom = build_darken_domain(1)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=1.0))
    state = solver.solve(model)
    bi, bj, axis, values = solver.bond_current_table(state)
    e1 = axis == 0
    assert np.max(np.abs(values[e1] - 0.4)) < 1e-10  # 2 lam / (4N+1) = 0.4
    assert np.max(np.abs(values[~e1])) < 1e-10

    bond = ((0, 0, 0), (1, 0, 0))
    cur = solver.stationary_current(state, bond)
    assert cur.value == pytest.approx(0.4, abs=1e-10)
    assert cur.reversed().value == -cur.value


def test_channel_currents():
    dom = build_channel_domain(4, 1)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=0.0, lam=1.0))
    state = solver.solve(model)
    cur = solver.stationary_current(state, ((0, 0, 0), (1, 0, 0)))
    assert cur.value == pytest.approx(0.25, abs=1e-10)  # lam / N
    # section-normalized drop: N * (tilt(x) - tilt(x+1)) = lam toward +x1
    assert dom.N * cur.value == pytest.approx(1.0, abs=1e-9)


def test_zero_drive_means_zero_currents():
    dom = build_darken_domain(1)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=0.0))
    state = solver.solve(model)
    _, _, _, values = solver.bond_current_table(state)
    assert np.max(np.abs(values)) < 1e-10


def test_current_rejects_non_neighbors():
    dom = build_darken_domain(1)
    state = solver.solve(assemble(dom, ModelParams()))
    with pytest.raises(ValueError):
        solver.stationary_current(state, ((0, 0, 0), (2, 0, 0)))


def test_interior_current_conservation():
    dom = build_darken_domain(2)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=0.8))
    state = solver.solve(model)
    g = state.gradient_untilted
    # interior site with all six neighbors in-core and a transverse-constant tilt
    for x in ((1, 0, 0), (-2, 0, 0)):
        i = dom.core_index(x)
        total = 0.0
        for y, in_core in dom.neighbors(x):
            if in_core:
                total += g[i] - g[dom.core_index(y)]
        assert abs(total) < 1e-10


def test_section_sums_constant_across_sections():
    dom = build_darken_domain(2)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=1.0))
    state = solver.solve(model)
    bi, _, axis, values = solver.bond_current_table(state)
    e1 = axis == 0
    x1s = dom.core[bi[e1], 0]
    vals = values[e1]
    means = [vals[x1s == x].mean() for x in np.unique(x1s)]
    assert np.ptp(means) < 1e-10


def test_sectional_average():
    dom = build_darken_domain(1)
    const = ScalarField(dom, np.full(dom.n_sites, 3.25))
    assert solver.sectional_average(const, 0) == pytest.approx(3.25)

    mixed = np.zeros(dom.n_sites)
    sec = dom.core[:, 0] == -1
    mixed[sec] = np.arange(int(sec.sum()), dtype=float)  # 0,1,2,3 -> mean 1.5
    assert solver.sectional_average(ScalarField(dom, mixed), -1) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        solver.sectional_average(const, 42)

    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=0.5))
    m = solver.stationary_mean(model)
    # the darken mean is transverse-constant, so the sectional average
    # reproduces the on-axis value at every section
    for x1 in range(-2, 2):
        assert solver.sectional_average(m, x1) == pytest.approx(
            m.at((x1, 0, 0)), abs=1e-12
        )


def test_uphill_window_detected_near_junction():
    dom = build_darken_domain(8)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=0.5))
    state = solver.solve(model)
    window = solver.uphill_window(state)
    gamma = junction.solve_gamma(1.0)
    assert window.found
    assert window.x1_lo == 0
    assert window.x1_hi <= int(np.ceil(3.0 / gamma))


def test_uphill_window_absent_without_field_step():
    dom = build_darken_domain(4)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=0.0, lam=0.5))
    window = solver.uphill_window(solver.solve(model))
    assert not window.found


def test_uphill_window_absent_without_current():
    dom = build_darken_domain(4)
    model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=0.0))
    window = solver.uphill_window(solver.solve(model))
    assert not window.found


def test_fick_bulk_slope_matches_current():
    # away from the faces and the junction, the discrete profile slope is
    # minus the bond current, within the advertised layer-decay envelope
    for N in (4, 8, 16):
        dom = build_darken_domain(N)
        params = ModelParams(J=1.0, beta=1.0, h=-1.0, lam=1.0)
        model = assemble(dom, params)
        state = solver.solve(model)
        xs = np.arange(-2 * N, 2 * N)
        pts = np.zeros((xs.size, 3), dtype=np.int64)
        pts[:, 0] = xs
        idx = dom.core_index(pts)
        m = state.mean.values[idx]
        g = state.gradient_untilted
        currents = g[idx[:-1]] - g[idx[1:]]
        slopes = np.diff(m)
        bond_x1 = xs[:-1]
        margin = np.log(N)
        dist = np.minimum.reduce(
            [
                np.abs(bond_x1 + 2 * N),
                np.abs(bond_x1),
                np.abs(bond_x1 + 1),
                np.abs(bond_x1 - (2 * N - 1)),
            ]
        )
        bulk = dist > margin
        omega = 6.0 / 7.0
        envelope = omega ** np.log(N) + np.log(N) * params.lam / N
        assert np.max(np.abs(slopes[bulk] + currents[bulk])) < envelope


def test_macroscopic_limit_error_decreases():
    errors = {r: [] for r in (-1.0, -0.5, 0.5, 1.0)}
    for N in (4, 8, 16):
        dom = build_darken_domain(N)
        model = assemble(dom, ModelParams(J=1.0, beta=1.0, h=-1.0, lam=1.0))
        state = solver.solve(model)
        for r in errors:
            x1 = int(np.floor(N * r))
            got = state.mean.at((x1, 0, 0))
            want = junction.macroscopic_profile(r, 1.0, -1.0)
            errors[r].append(abs(got - want))
    for seq in errors.values():
        assert seq[0] > seq[1] > seq[2]
