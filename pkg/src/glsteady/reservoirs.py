"""Random-walk Monte Carlo on the channel geometry and its reservoirs.

The walk jumps to a uniformly random available neighbor in the ambient set
(the embedded jump chain of the rate-one-per-edge continuous-time walk; all
harmonic quantities depend only on this chain).  The bounded harmonic
function interpolating between the two reservoir chemical potentials is
estimated through absorption probabilities:

    lambda*(x) ~= lam * (P[absorbed left] - P[absorbed right]),

where "absorbed" means reaching a far classification plane at distance
``R >= M^2 + 1`` beyond the reservoir mouth; once that deep inside a
half-space, the chance of ever returning to the channel screen vanishes
as the geometry grows, which is what makes the finite-distance classifier
a faithful stand-in for "stays in this reservoir forever".

The batch engine resamples blocked proposals as holds; conditioned on
moving, the step is uniform over available neighbors, so every
jump-chain functional (absorption side, screen hitting) is unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import NEIGHBOR_OFFSETS, LatticeDomain, Site


class StatisticalValidityError(RuntimeError):
    """Raised when too many walks hit the per-sample step cap."""


CAPPED_FRACTION_LIMIT = 1e-3
DEFAULT_STEP_CAP = 10_000_000


@dataclass
class WalkState:
    position: Site
    time: int = 0


@dataclass
class MCEstimate:
    """Monte Carlo value with binomial-type standard error."""

    value: float
    stderr: float
    n_samples: int
    n_capped: int = 0

    @property
    def capped_fraction(self) -> float:
        total = self.n_samples + self.n_capped
        return self.n_capped / total if total else 0.0

    @property
    def valid(self) -> bool:
        return self.capped_fraction <= CAPPED_FRACTION_LIMIT


def _rng(seed: int, op: int, site: Site) -> np.random.Generator:
    """Independent substream keyed by (seed, operation, start site)."""
    shift = 1 << 20
    entropy = [int(seed) & (2**63 - 1), op, site[0] + shift, site[1] + shift, site[2] + shift]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def walk_step(domain: LatticeDomain, state: WalkState, rng: np.random.Generator) -> WalkState:
    """One jump to a uniformly random available neighbor."""
    x = np.asarray(state.position, dtype=np.int64)
    if not domain.contains(x):
        raise ValueError(f"walker position {state.position} is outside the ambient set")
    nbrs = x + NEIGHBOR_OFFSETS
    avail = nbrs[domain.contains(nbrs)]
    pick = avail[int(rng.integers(0, len(avail)))]
    return WalkState(tuple(int(v) for v in pick), state.time + 1)


def default_far_offset(M: int, eps: float = 0.1) -> int:
    """Classification-plane offset ``max(ceil(M^(2+eps)), M^2 + 1)``."""
    return max(math.ceil(M ** (2.0 + eps)), M * M + 1)


def _propose_moves(domain, pos, active, rng):
    """Advance active walkers by one proposal round (blocked moves hold)."""
    dirs = rng.integers(0, 6, active.size)
    prop = pos[active] + NEIGHBOR_OFFSETS[dirs]
    ok = domain.contains(prop)
    moved = active[ok]
    pos[moved] = prop[ok]


def _run_absorption(domain, start, n, rng, left_plane, right_plane, step_cap):
    pos = np.tile(np.asarray(start, dtype=np.int64), (n, 1))
    outcome = np.zeros(n, dtype=np.int8)  # 0 active, 1 left, 2 right
    active = np.arange(n)
    steps = 0
    while active.size:
        x1 = pos[active, 0]
        left = x1 <= left_plane
        right = x1 >= right_plane
        done = left | right
        if np.any(done):
            outcome[active[left]] = 1
            outcome[active[right]] = 2
            active = active[~done]
            if not active.size:
                break
        if steps >= step_cap:
            break
        _propose_moves(domain, pos, active, rng)
        steps += 1
    n_left = int(np.sum(outcome == 1))
    n_right = int(np.sum(outcome == 2))
    return n_left, n_right, int(active.size)


def estimate_absorption(
    domain: LatticeDomain,
    x: Site,
    n_samples: int,
    seed: int = 0,
    far_offset: int | None = None,
    eps: float = 0.1,
    step_cap: int = DEFAULT_STEP_CAP,
) -> tuple[MCEstimate, MCEstimate]:
    """Left/right absorption probabilities from ``x`` on the channel domain.

    Each walk runs until it crosses ``x1 <= -N - R`` or ``x1 >= N + R``
    with ``R = far_offset`` (default ``max(ceil(M^(2+eps)), M^2+1)``).
    The two estimates sum to one over the classified samples; walks hitting
    the step cap are counted separately and flagged through
    ``MCEstimate.valid``.
    """
    if domain.kind != "channel":
        raise ValueError("absorption estimation is defined on the channel geometry")
    if not domain.contains(np.asarray(x, dtype=np.int64)):
        raise ValueError(f"start site {x} is outside the ambient set")
    R = default_far_offset(domain.M, eps) if far_offset is None else int(far_offset)
    if R < domain.M**2 + 1:
        raise ValueError(f"far offset must be >= M^2 + 1 = {domain.M**2 + 1}, got {R}")
    rng = _rng(seed, 1, x)
    n_left, n_right, n_capped = _run_absorption(
        domain, x, n_samples, rng, -domain.N - R, domain.N + R, step_cap
    )
    n_cls = n_left + n_right
    if n_cls == 0:
        raise StatisticalValidityError("all walks hit the step cap before classification")
    p_left = n_left / n_cls
    se = math.sqrt(p_left * (1.0 - p_left) / n_cls)
    return (
        MCEstimate(p_left, se, n_cls, n_capped),
        MCEstimate(1.0 - p_left, se, n_cls, n_capped),
    )


def estimate_lambda_star(
    domain: LatticeDomain,
    x: Site,
    lam: float,
    n_samples: int,
    seed: int = 0,
    far_offset: int | None = None,
    eps: float = 0.1,
    step_cap: int = DEFAULT_STEP_CAP,
) -> MCEstimate:
    """Harmonic-function estimate ``lam (p_left - p_right)`` at ``x``."""
    p_left, p_right = estimate_absorption(
        domain, x, n_samples, seed=seed, far_offset=far_offset, eps=eps, step_cap=step_cap
    )
    value = lam * (p_left.value - p_right.value)
    stderr = 2.0 * abs(lam) * p_left.stderr
    return MCEstimate(value, stderr, p_left.n_samples, p_left.n_capped)


def harmonicity_residual(domain: LatticeDomain, lambda_star_estimator, x: Site):
    """Deviation of an estimator from the neighbor-average (harmonic) property.

    ``lambda_star_estimator`` maps a site to an :class:`MCEstimate`.  Returns
    ``(residual, stderr)`` for ``est(x) - mean over ambient neighbors``.
    """
    nbrs = [site for site, _ in domain.neighbors(x)]
    k = len(nbrs)
    center = lambda_star_estimator(x)
    others = [lambda_star_estimator(y) for y in nbrs]
    residual = center.value - sum(e.value for e in others) / k
    var = center.stderr**2 + sum(e.stderr**2 for e in others) / k**2
    return float(residual), float(math.sqrt(var))


def _sigma_plus_mask(domain, pts):
    return (
        (pts[:, 0] == domain.N)
        & (np.abs(pts[:, 1]) <= domain.M)
        & (np.abs(pts[:, 2]) <= domain.M)
    )


def hitting_sigma_probability(
    domain: LatticeDomain,
    x: Site,
    n_samples: int,
    seed: int = 0,
    truncation_offset: int | None = None,
    eps: float = 0.1,
    step_cap: int = DEFAULT_STEP_CAP,
) -> MCEstimate:
    """Probability of hitting the right contact screen before drifting far away.

    Walks start at ``x`` in the right half-space and stop on reaching the
    screen (hit) or the truncation plane ``x1 >= N + truncation_offset``
    (miss).  Truncation makes the reported value a lower bound on the
    untruncated hitting probability; the truncation offset defaults to four
    classification lengths and is recorded by callers.
    """
    if domain.kind != "channel":
        raise ValueError("screen hitting is defined on the channel geometry")
    x = tuple(int(v) for v in x)
    if x[0] < domain.N:
        raise ValueError("start site must lie in the right half-space (x1 >= N)")
    R = default_far_offset(domain.M, eps)
    if truncation_offset is None:
        truncation_offset = max(4 * R, 2 * (x[0] - domain.N), 8)
    trunc_plane = domain.N + truncation_offset
    if x[0] >= trunc_plane:
        raise ValueError("start site lies beyond the truncation plane")

    rng = _rng(seed, 2, x)
    pos = np.tile(np.asarray(x, dtype=np.int64), (n_samples, 1))
    outcome = np.zeros(n_samples, dtype=np.int8)  # 1 hit, 2 truncated
    active = np.arange(n_samples)
    steps = 0
    while active.size:
        hit = _sigma_plus_mask(domain, pos[active])
        far = pos[active, 0] >= trunc_plane
        done = hit | far
        if np.any(done):
            outcome[active[hit]] = 1
            outcome[active[far & ~hit]] = 2
            active = active[~done]
            if not active.size:
                break
        if steps >= step_cap:
            break
        _propose_moves(domain, pos, active, rng)
        steps += 1
    n_capped = int(active.size)
    n_cls = n_samples - n_capped
    if n_cls == 0:
        raise StatisticalValidityError("all walks hit the step cap")
    p = float(np.sum(outcome == 1)) / n_cls
    se = math.sqrt(p * (1.0 - p) / n_cls)
    return MCEstimate(p, se, n_cls, n_capped)


def hitting_probability_mc(
    domain: LatticeDomain,
    start: Site,
    targets,
    stop_radius: int,
    n_samples: int,
    seed: int = 0,
    step_cap: int = DEFAULT_STEP_CAP,
) -> MCEstimate:
    """Probability of visiting a finite target set before leaving a box.

    The walk stops on reaching any target site (hit) or when its Chebyshev
    distance from ``start`` reaches ``stop_radius`` (miss).  This matches a
    finite linear system on the box exactly, which serves as its oracle.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    start_arr = np.asarray(start, dtype=np.int64)
    rng = _rng(seed, 3, tuple(int(v) for v in start_arr))
    pos = np.tile(start_arr, (n_samples, 1))
    outcome = np.zeros(n_samples, dtype=np.int8)
    active = np.arange(n_samples)
    steps = 0
    while active.size:
        cur = pos[active]
        hit = np.any(np.all(cur[:, None, :] == targets[None, :, :], axis=2), axis=1)
        out = np.max(np.abs(cur - start_arr), axis=1) >= stop_radius
        done = hit | out
        if np.any(done):
            outcome[active[hit]] = 1
            outcome[active[out & ~hit]] = 2
            active = active[~done]
            if not active.size:
                break
        if steps >= step_cap:
            break
        _propose_moves(domain, pos, active, rng)
        steps += 1
    n_capped = int(active.size)
    n_cls = n_samples - n_capped
    if n_cls == 0:
        raise StatisticalValidityError("all walks hit the step cap")
    p = float(np.sum(outcome == 1)) / n_cls
    se = math.sqrt(p * (1.0 - p) / n_cls)
    return MCEstimate(p, se, n_cls, n_capped)


def reflected_walk(domain: LatticeDomain, z_trajectory: np.ndarray) -> np.ndarray:
    """Fold a free-walk path into the right half-space of the channel.

    Positions with ``z1 < N`` are reflected through the plane ``x1 = N - 1/2``
    (``x1 -> 2N - 1 - x1``).  Up to the first visit to the contact screen,
    the folded path has the law of the ambient-constrained walk.
    """
    if domain.kind != "channel":
        raise ValueError("the reflection is defined for the channel geometry")
    z = np.asarray(z_trajectory, dtype=np.int64)
    out = z.copy()
    mask = z[:, 0] < domain.N
    out[mask, 0] = 2 * domain.N - 1 - z[mask, 0]
    return out


def free_walk(start: Site, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Simple random walk path on the full lattice, shape (n_steps+1, 3)."""
    steps = NEIGHBOR_OFFSETS[rng.integers(0, 6, n_steps)]
    traj = np.empty((n_steps + 1, 3), dtype=np.int64)
    traj[0] = np.asarray(start, dtype=np.int64)
    traj[1:] = traj[0] + np.cumsum(steps, axis=0)
    return traj
