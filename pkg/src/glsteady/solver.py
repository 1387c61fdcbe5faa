"""Exact stationary state: mean profile, covariance, bond currents.

The stationary mean solves ``(D - A) m = b``.  It is computed by the Jacobi
fixed point ``m <- D^{-1}(A m + b)``, whose error contracts at least by
``max_x J K^-_x / (1 + J K_x) <= 6J/(1+6J) < 1`` per sweep, so convergence
is guaranteed a priori.  A dense direct solve is kept alongside as an
independent oracle for small instances.

The covariance of the stationary Gaussian is exposed in the normalization
``C = (2 beta (D - A))^{-1}``, evaluated row by row through the Neumann
series ``C = (2 beta)^{-1} sum_n D^{-1} (A D^{-1})^n`` with a geometric
tail bound.  Row sums of this normalization never exceed ``(2 beta)^{-1}``.
(The Langevin process itself relaxes to twice this matrix; see
``dynamics.stationary_covariance`` for that side of the bookkeeping.)

Sign convention for currents: a bond current is positive when magnetization
flows toward increasing coordinate, ``I(x -> y) = tilt(x) - tilt(y)`` in the
stationary state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Site
from .model import QuadraticModel, ScalarField

DENSE_ORACLE_LIMIT = 4000


class SolverError(RuntimeError):
    """Raised when an iterative solve does not reach its tolerance."""


def _update_contraction(model: QuadraticModel) -> float:
    """sup-norm contraction of the Jacobi error map, ``||D^{-1} A||_inf``.

    Equals ``max_x J K^-_x / (1 + J K_x)``, which never exceeds
    ``6J/(1+6J) < 1`` on the supported geometries.
    """
    if model.adjacency.nnz == 0:
        return 0.0
    row_sums = np.asarray(model.adjacency.sum(axis=1)).ravel()
    return float(np.max(row_sums / model.diag))


def stationary_mean(
    model: QuadraticModel, tol: float = 1e-12, max_iters: int | None = None
) -> ScalarField:
    """Solve ``(D - A) m = b`` by the Jacobi fixed point.

    Returns the mean field with ``||(D-A)m - b||_inf <= tol``.  Raises
    :class:`SolverError` with the final residual if the iteration budget is
    exhausted (which the a-priori contraction bound makes unreachable for
    well-formed models).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    D, A, b = model.diag, model.adjacency, model.b
    omega = _update_contraction(model)
    if omega >= 1.0:
        raise SolverError(f"model is not diagonally dominant (contraction {omega:.3f} >= 1)")
    if max_iters is None:
        # ||r_k|| <= ||D-A|| omega^k ||psi*||, ||psi*|| <= ||b/D|| / (1-omega)
        dma_norm = float(np.max(D + np.asarray(A.sum(axis=1)).ravel())) if b.size else 1.0
        r0 = dma_norm * float(np.max(np.abs(b / D))) / (1.0 - omega) if b.size else 0.0
        if omega == 0.0 or r0 <= tol:
            max_iters = 1
        else:
            max_iters = int(np.ceil(np.log(tol / r0) / np.log(omega))) + 50

    psi = np.zeros_like(b)
    for _ in range(max_iters):
        nxt = (A @ psi + b) / D
        res_prev = float(np.max(np.abs(D * (nxt - psi))))
        psi = nxt
        if res_prev <= tol:
            break
    final = float(np.max(np.abs(D * psi - A @ psi - b))) if b.size else 0.0
    if final > tol:
        raise SolverError(
            f"stationary mean did not converge: residual {final:.3e} > tol {tol:.1e} "
            f"after {max_iters} iterations"
        )
    return ScalarField(model.domain, psi)


def dense_mean(model: QuadraticModel) -> np.ndarray:
    """Direct dense solve of ``(D - A) m = b`` (oracle path, small instances)."""
    if model.n > DENSE_ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to {DENSE_ORACLE_LIMIT} sites, got {model.n}")
    mat = np.diag(model.diag) - model.adjacency.toarray()
    return np.linalg.solve(mat, model.b)


def dense_covariance(model: QuadraticModel) -> np.ndarray:
    """Dense ``(2 beta (D - A))^{-1}`` (oracle path, small instances)."""
    if model.n > DENSE_ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to {DENSE_ORACLE_LIMIT} sites, got {model.n}")
    mat = 2.0 * model.params.beta * (np.diag(model.diag) - model.adjacency.toarray())
    return np.linalg.inv(mat)


@dataclass
class GaussianSteadyState:
    """Stationary mean plus on-demand covariance access."""

    model: QuadraticModel
    mean: ScalarField
    _grad_untilted: np.ndarray | None = field(default=None, repr=False)

    @property
    def gradient_untilted(self) -> np.ndarray:
        """Gradient of the untilted energy at the mean (equals the tilt up to
        the solver residual); cached, used by all current evaluations."""
        if self._grad_untilted is None:
            self._grad_untilted = self.model.gradient_untilted(self.mean.values)
        return self._grad_untilted


def solve(model: QuadraticModel, tol: float = 1e-12, max_iters: int | None = None) -> GaussianSteadyState:
    return GaussianSteadyState(model, stationary_mean(model, tol=tol, max_iters=max_iters))


def covariance_row(state: GaussianSteadyState, x: Site, tol: float = 1e-12) -> ScalarField:
    """Row ``C(x, .)`` of ``(2 beta (D-A))^{-1}`` by truncated Neumann series.

    Terms are added until the geometric tail bound drops below ``tol``.
    """
    model = state.model
    D, A = model.diag, model.adjacency
    beta = model.params.beta
    i = model.domain.core_index(x)
    w = np.zeros(model.n)
    w[i] = 1.0 / (2.0 * beta)
    w /= D
    total = w.copy()
    omega = _update_contraction(model)
    if omega >= 1.0:
        raise SolverError(f"model is not diagonally dominant (contraction {omega:.3f} >= 1)")
    if omega > 0.0:
        tail_factor = omega / (1.0 - omega)
        for _ in range(100_000):
            if float(np.max(np.abs(w))) * tail_factor <= tol:
                break
            w = (A @ w) / D
            total += w
        else:
            raise SolverError("covariance Neumann series did not reach its tail bound")
    return ScalarField(model.domain, total)


def covariance_entry(state: GaussianSteadyState, x: Site, y: Site, tol: float = 1e-12) -> float:
    return covariance_row(state, x, tol=tol).at(y)


@dataclass
class BondCurrent:
    """Stationary current through an oriented bond; antisymmetric in (x, y)."""

    x: Site
    y: Site
    value: float

    def reversed(self) -> "BondCurrent":
        return BondCurrent(self.y, self.x, -self.value)


def stationary_current(state: GaussianSteadyState, bond: tuple[Site, Site]) -> BondCurrent:
    """Mean instantaneous current through a core bond ``(x, y)``.

    Evaluated as the difference of the untilted energy gradient at the mean,
    so the identity ``I(x->y) = tilt(x) - tilt(y)`` is an output to check,
    not an input.
    """
    x, y = bond
    dx = np.asarray(y, dtype=np.int64) - np.asarray(x, dtype=np.int64)
    if np.sum(np.abs(dx)) != 1:
        raise ValueError(f"{x} and {y} are not nearest neighbors")
    i = state.model.domain.core_index(x)
    j = state.model.domain.core_index(y)
    g = state.gradient_untilted
    return BondCurrent(tuple(int(v) for v in x), tuple(int(v) for v in y), float(g[i] - g[j]))


def bond_current_table(state: GaussianSteadyState):
    """Currents for every core bond: arrays (i, j, axis, value)."""
    dom = state.model.domain
    g = state.gradient_untilted
    values = g[dom.bonds_i] - g[dom.bonds_j]
    return dom.bonds_i, dom.bonds_j, dom.bond_axis, values


def sectional_average(phi: ScalarField, x1: int) -> float:
    """Arithmetic mean of a field over the section ``{y : y_1 = x1}``."""
    mask = phi.domain.core[:, 0] == x1
    if not np.any(mask):
        raise ValueError(f"empty section x1={x1}")
    return float(np.mean(phi.values[mask]))


@dataclass
class UphillWindow:
    """Maximal on-axis stretch with rising profile and positive e1 current."""

    found: bool
    x1_lo: int | None = None
    x1_hi: int | None = None


def _axis_indices(state: GaussianSteadyState) -> tuple[np.ndarray, np.ndarray]:
    dom = state.model.domain
    if dom.kind == "darken":
        xs = np.arange(-2 * dom.N, 2 * dom.N, dtype=np.int64)
    elif dom.kind == "channel":
        xs = np.arange(-(dom.N - 1), dom.N, dtype=np.int64)
    else:
        raise ValueError("no axis for this domain kind")
    pts = np.zeros((xs.size, 3), dtype=np.int64)
    pts[:, 0] = xs
    return xs, state.model.domain.core_index(pts)


def on_axis_profile(state: GaussianSteadyState) -> tuple[np.ndarray, np.ndarray]:
    """(x1 values, mean values) along the axis ``x2 = x3 = 0``."""
    xs, idx = _axis_indices(state)
    return xs, state.mean.values[idx]


def uphill_window(state: GaussianSteadyState) -> UphillWindow:
    """Detect the uphill-diffusion window just right of the junction.

    Scans on-axis bonds with ``x1 >= 0`` for stretches where the profile
    strictly increases while the e1 current stays positive, and returns the
    longest such stretch as a site interval ``[x1_lo, x1_hi]``.
    """
    if state.model.domain.kind != "darken":
        raise ValueError("the uphill window is defined for the darken geometry")
    xs, idx = _axis_indices(state)
    m = state.mean.values[idx]
    g = state.gradient_untilted
    currents = g[idx[:-1]] - g[idx[1:]]
    bond_x1 = xs[:-1]
    # strict positivity up to the solve's numerical noise (a bond value
    # carries at most twice the mean-equation residual)
    noise = 4.0 * float(np.max(np.abs(state.model.gradient(state.mean.values))))
    up = (np.diff(m) > noise) & (currents > noise) & (bond_x1 >= 0)

    best_len, best_lo = 0, 0
    run_len, run_lo = 0, 0
    for k, flag in enumerate(up):
        if flag:
            if run_len == 0:
                run_lo = k
            run_len += 1
            if run_len > best_len:
                best_len, best_lo = run_len, run_lo
        else:
            run_len = 0
    if best_len == 0:
        return UphillWindow(False)
    lo = int(bond_x1[best_lo])
    hi = int(bond_x1[best_lo + best_len - 1]) + 1
    return UphillWindow(True, lo, hi)
