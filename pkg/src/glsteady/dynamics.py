"""Langevin dynamics: bond exchanges plus driven boundary sites.

The process combines Kawasaki bond generators (which exchange magnetization
between the two endpoints of a core bond, conserving their sum) with
Glauber generators on the two driven faces (which relax the face spins
toward boundary chemical potentials).  For the quadratic energy this is a
linear diffusion

    dphi = (c - B phi) dt + noise,   B = G (D - A),   noise rate (2/beta) G,

where ``G = sum_bonds e_b e_b^T + sum_driven delta_z delta_z^T`` and
``c = G b0 + sum_driven delta_z lambda_z`` with ``b0`` the untilted linear
field.  The exact stationary state is Gaussian with mean solving
``B m = c`` (identical to the solver's mean) and covariance solving the
Lyapunov equation ``B C + C B^T = (2/beta) G``, i.e.
``C = (beta (D - A))^{-1}``.

The integrator is Euler-Maruyama with one shared noise increment per bond,
applied with opposite signs to the bond's endpoints, so each bond's pair
sum is conserved by the noise exactly as in the continuous process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import QuadraticModel, ScalarField

_DENSE_LIMIT = 4000
_CHUNK = 4096
_N_BATCHES = 30
_DIVERGENCE_LIMIT = 1e6


@dataclass
class MobilityStructure:
    """Bond list plus driven sites; holds G and the noise incidence map."""

    n: int
    bonds_i: np.ndarray
    bonds_j: np.ndarray
    driven_idx: np.ndarray
    driven_targets: np.ndarray
    G: sp.csr_matrix
    incidence: sp.csr_matrix  # columns: one per bond (+1/-1), one per driven site (+1)

    @property
    def n_noise(self) -> int:
        return self.bonds_i.size + self.driven_idx.size


def make_mobility(
    n: int,
    bonds_i: np.ndarray,
    bonds_j: np.ndarray,
    driven_idx: np.ndarray,
    driven_targets: np.ndarray,
) -> MobilityStructure:
    """Assemble G and the incidence map from raw bond/driven index arrays."""
    bonds_i = np.asarray(bonds_i, dtype=np.int64)
    bonds_j = np.asarray(bonds_j, dtype=np.int64)
    driven_idx = np.asarray(driven_idx, dtype=np.int64)
    driven_targets = np.asarray(driven_targets, dtype=np.float64)
    nb, nd = bonds_i.size, driven_idx.size

    rows = np.concatenate([bonds_i, bonds_j, driven_idx])
    cols = np.concatenate([np.arange(nb), np.arange(nb), nb + np.arange(nd)])
    vals = np.concatenate([np.ones(nb), -np.ones(nb), np.ones(nd)])
    incidence = sp.csr_matrix((vals, (rows, cols)), shape=(n, nb + nd))
    G = (incidence @ incidence.T).tocsr()
    return MobilityStructure(n, bonds_i, bonds_j, driven_idx, driven_targets, G, incidence)


def build_mobility(
    model: QuadraticModel,
    lambda_left: float | None = None,
    lambda_right: float | None = None,
) -> MobilityStructure:
    """Mobility of the darken geometry: all core bonds plus the two driven faces.

    The driven targets default to ``+lam`` on the left face and ``-lam`` on
    the right face.
    """
    dom = model.domain
    if dom.kind != "darken":
        raise ValueError("the driven dynamics is defined on the darken geometry")
    lam = model.params.lam
    if lambda_left is None:
        lambda_left = lam
    if lambda_right is None:
        lambda_right = -lam
    x1 = dom.core[:, 0]
    left = np.flatnonzero(x1 == -2 * dom.N)
    right = np.flatnonzero(x1 == 2 * dom.N - 1)
    driven_idx = np.concatenate([left, right])
    targets = np.concatenate(
        [np.full(left.size, lambda_left), np.full(right.size, lambda_right)]
    )
    return make_mobility(dom.n_sites, dom.bonds_i, dom.bonds_j, driven_idx, targets)


def build_drift(
    model: QuadraticModel,
    lambda_left: float | None = None,
    lambda_right: float | None = None,
):
    """Drift data of the linear diffusion: returns ``(B, c, mobility)``.

    Models without driven sites are rejected: the conserved bond dynamics
    alone has no unique stationary state.
    """
    mob = build_mobility(model, lambda_left, lambda_right)
    if mob.driven_idx.size == 0:
        raise ValueError("no driven sites: the conserved dynamics has no unique steady state")
    B = (mob.G @ model.d_minus_a()).tocsr()
    c = mob.G @ model.b_untilted
    c[mob.driven_idx] += mob.driven_targets
    return B, c, mob


def stationary_covariance(model: QuadraticModel) -> np.ndarray:
    """Stationary covariance of the diffusion, ``(beta (D - A))^{-1}`` (dense)."""
    if model.n > _DENSE_LIMIT:
        raise ValueError(f"dense covariance limited to {_DENSE_LIMIT} sites")
    mat = model.params.beta * (np.diag(model.diag) - model.adjacency.toarray())
    return np.linalg.inv(mat)


def lyapunov_residual(model: QuadraticModel, mobility: MobilityStructure | None = None) -> float:
    """``||B C + C B^T - (2/beta) G||_inf`` with the stationary covariance.

    Vanishing residual verifies that the Gaussian state is invariant for the
    continuous-time process.
    """
    if mobility is None:
        _, _, mobility = build_drift(model)
    B = (mobility.G @ model.d_minus_a()).toarray()
    C = stationary_covariance(model)
    Q = (2.0 / model.params.beta) * mobility.G.toarray()
    return float(np.max(np.abs(B @ C + C @ B.T - Q)))


def mean_equation_residual(model: QuadraticModel, mean: ScalarField) -> float:
    """``||B m - c||_inf`` for a candidate stationary mean."""
    B, c, _ = build_drift(model)
    return float(np.max(np.abs(B @ mean.values - c)))


def gershgorin_dt_max(B) -> float:
    """Stability ceiling ``2 / max_row_abs_sum(B)`` for the Euler step."""
    Babs = abs(B)
    row_sums = np.asarray(Babs.sum(axis=1)).ravel()
    return 2.0 / float(np.max(row_sums))


@dataclass
class SimulationConfig:
    dt: float = 1e-3
    n_steps: int = 200_000
    burn_in: int = 50_000
    seed: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.burn_in < self.n_steps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < n_steps")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


@dataclass
class TraceSummary:
    """Time averages with batch-means error bars.

    ``batch_phi`` holds the per-batch mean field (n_batches, n).  Gradient
    statistics are linear in phi, so batch gradients are derived from batch
    field means without per-step bookkeeping.
    """

    model: QuadraticModel
    mobility: MobilityStructure
    batch_phi: np.ndarray
    n_samples: int
    config: SimulationConfig

    def __post_init__(self):
        self.site_mean = self.batch_phi.mean(axis=0)
        nb = self.batch_phi.shape[0]
        self.site_stderr = self.batch_phi.std(axis=0, ddof=1) / np.sqrt(nb)
        D, A = self.model.diag, self.model.adjacency
        b0 = self.model.b_untilted
        self.batch_grad = self.batch_phi * D - self.batch_phi @ A.T - b0
        self.grad_mean = self.batch_grad.mean(axis=0)

    def mean_field(self) -> ScalarField:
        return ScalarField(self.model.domain, self.site_mean.copy())


@dataclass
class CurrentEstimate:
    value: float
    stderr: float


def empirical_current(trace: TraceSummary, bond) -> CurrentEstimate:
    """Time-averaged current through a core bond, with batch-means stderr."""
    x, y = bond
    i = trace.model.domain.core_index(x)
    j = trace.model.domain.core_index(y)
    samples = trace.batch_grad[:, i] - trace.batch_grad[:, j]
    nb = samples.size
    return CurrentEstimate(
        float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(nb))
    )


def simulate(
    model: QuadraticModel,
    config: SimulationConfig,
    lambda_left: float | None = None,
    lambda_right: float | None = None,
) -> TraceSummary:
    """Euler-Maruyama trajectory of the driven diffusion, batch-averaged.

    One Gaussian increment is drawn per bond and applied with opposite signs
    to its endpoints (pair-sum conserving); driven sites get independent
    increments.  The step size must stay below the Gershgorin stability
    ceiling.  Reproducible: identical config gives a bit-identical summary.
    """
    mob = build_mobility(model, lambda_left, lambda_right)
    if mob.driven_idx.size == 0:
        raise ValueError("no driven sites: the conserved dynamics has no unique steady state")
    B = (mob.G @ model.d_minus_a()).tocsr()
    c = np.asarray(mob.G @ model.b_untilted).ravel()
    c[mob.driven_idx] += mob.driven_targets

    dt_max = gershgorin_dt_max(B)
    if config.dt >= dt_max:
        raise ValueError(
            f"dt={config.dt:g} unstable for this model; need dt < {dt_max:.3e}"
        )
    dense = model.n <= _DENSE_LIMIT
    Bop = B.toarray() if dense else B
    inc = mob.incidence.toarray() if dense else mob.incidence

    n = model.n
    sigma = np.sqrt(2.0 * config.dt / model.params.beta)
    n_keep_raw = (config.n_steps - config.burn_in + config.thin - 1) // config.thin
    batch_size = max(n_keep_raw // _N_BATCHES, 1)
    n_keep = batch_size * _N_BATCHES
    batch_sums = np.zeros((_N_BATCHES, n))

    rng = np.random.default_rng(config.seed)
    phi = np.zeros(n)
    dt = config.dt
    step = 0
    sample = 0
    while step < config.n_steps:
        m = min(_CHUNK, config.n_steps - step)
        xi = rng.standard_normal((m, mob.n_noise))
        noise = sigma * (xi @ inc.T) if dense else sigma * (inc @ xi.T).T
        for t in range(m):
            phi = phi + dt * (c - Bop @ phi) + noise[t]
            step += 1
            if step > config.burn_in and (step - config.burn_in - 1) % config.thin == 0:
                if sample < n_keep:
                    batch_sums[sample // batch_size] += phi
                    sample += 1
        if not np.all(np.isfinite(phi)) or np.max(np.abs(phi)) > _DIVERGENCE_LIMIT:
            raise RuntimeError(
                f"trajectory diverged at step {step} (max |phi| = {np.max(np.abs(phi)):.3e}); "
                "reduce dt"
            )
    return TraceSummary(model, mob, batch_sums / batch_size, sample, config)


def simulate_exact(
    model: QuadraticModel,
    config: SimulationConfig,
    lambda_left: float | None = None,
    lambda_right: float | None = None,
) -> TraceSummary:
    """Exact-in-distribution Gaussian transition sampling (small cores).

    Each step draws from the diffusion's exact ``dt``-transition kernel:
    ``phi <- m + e^{-B dt}(phi - m) + xi`` with ``xi`` carrying the exact
    step covariance ``C - e^{-B dt} C e^{-B^T dt}``.  Valid at any step
    size (no stability ceiling), at the price of dense linear algebra and
    without the per-bond conservation structure of the Euler path.
    """
    import scipy.linalg

    if model.n > _DENSE_LIMIT:
        raise ValueError(f"exact transition sampling limited to {_DENSE_LIMIT} sites")
    mob = build_mobility(model, lambda_left, lambda_right)
    if mob.driven_idx.size == 0:
        raise ValueError("no driven sites: the conserved dynamics has no unique steady state")
    B = (mob.G @ model.d_minus_a()).toarray()
    c = np.asarray(mob.G @ model.b_untilted).ravel()
    c[mob.driven_idx] += mob.driven_targets
    mean = np.linalg.solve(B, c)
    C = stationary_covariance(model)

    prop = scipy.linalg.expm(-config.dt * B)
    step_cov = C - prop @ C @ prop.T
    step_cov = 0.5 * (step_cov + step_cov.T)
    chol = np.linalg.cholesky(step_cov)

    n = model.n
    n_keep_raw = (config.n_steps - config.burn_in + config.thin - 1) // config.thin
    batch_size = max(n_keep_raw // _N_BATCHES, 1)
    n_keep = batch_size * _N_BATCHES
    batch_sums = np.zeros((_N_BATCHES, n))

    rng = np.random.default_rng(config.seed)
    phi = np.zeros(n)
    step = 0
    sample = 0
    while step < config.n_steps:
        m = min(_CHUNK, config.n_steps - step)
        noise = rng.standard_normal((m, n)) @ chol.T
        for t in range(m):
            phi = mean + prop @ (phi - mean) + noise[t]
            step += 1
            if step > config.burn_in and (step - config.burn_in - 1) % config.thin == 0:
                if sample < n_keep:
                    batch_sums[sample // batch_size] += phi
                    sample += 1
    return TraceSummary(model, mob, batch_sums / batch_size, sample, config)


def relax_to_mean(model: QuadraticModel, dt: float | None = None, n_steps: int = 200_000) -> np.ndarray:
    """Noise-free flow ``phi <- phi + dt (c - B phi)``; converges to the mean."""
    B, c, _ = build_drift(model)
    if dt is None:
        dt = 0.5 * gershgorin_dt_max(B)
    Bop = B.toarray() if model.n <= _DENSE_LIMIT else B
    phi = np.zeros(model.n)
    for _ in range(n_steps):
        phi = phi + dt * (c - Bop @ phi)
    return phi
