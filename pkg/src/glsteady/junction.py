"""Infinite-volume junction layer and macroscopic profile.

At the junction between the doped and clean blocks the limiting profile
deviates from its macroscopic two-plateau shape in an O(1) boundary layer:

    m(x1) = m(0) exp(-gamma x1)                     for x1 >= 0,
    m(x1) = -|h| + |m(0)| exp(-gamma (|x1| - 1))    for x1 < 0,

with decay rate ``gamma`` the positive root of
``3 = (6J/(1+6J)) (2 + cosh(gamma))`` and junction value ``m(0)`` in
``(h/2, 0)``.  ``m(0)`` is fixed here by imposing the lattice fixed-point
recursion at ``x1 = 0``; a random-walk series over the doped half-space
serves as the independent oracle for that constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def solve_gamma(J: float, tol: float = 1e-13) -> float:
    """Positive root of ``3 = (6J/(1+6J)) (2 + cosh(gamma))``, by bisection.

    Equals ``arccosh(1 + 1/(2J))``; the bisection keeps the closed form
    honest in the tests.  The default tolerance leaves the defining
    equation satisfied to better than 1e-12.
    """
    if J <= 0:
        raise ValueError("J must be positive")
    omega = 6.0 * J / (1.0 + 6.0 * J)

    def f(g: float) -> float:
        return omega * (2.0 + np.cosh(g)) - 3.0

    lo = 0.0
    hi = 1.0
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("failed to bracket the decay rate")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gamma_closed_form(J: float) -> float:
    """``arccosh(1 + 1/(2J))`` (algebraic rearrangement of the root equation)."""
    if J <= 0:
        raise ValueError("J must be positive")
    return float(np.arccosh(1.0 + 1.0 / (2.0 * J)))


@dataclass
class JunctionLayer:
    """Closed-form junction profile: decay rate, junction value, evaluator."""

    J: float
    h: float
    gamma: float
    m0: float

    def profile(self, x1) -> np.ndarray | float:
        """Layer profile at integer coordinate(s) ``x1``."""
        x = np.asarray(x1, dtype=np.float64)
        right = self.m0 * np.exp(-self.gamma * x)
        left = -abs(self.h) + abs(self.m0) * np.exp(-self.gamma * (np.abs(x) - 1.0))
        out = np.where(x >= 0, right, left)
        return float(out) if np.isscalar(x1) else out


def junction_profile(J: float, h: float) -> JunctionLayer:
    """Junction layer for coupling ``J`` and doped-block field ``h < 0``.

    The junction value follows from requiring the three-point fixed-point
    recursion to hold at ``x1 = 0`` with the two exponential branches:

        m0 = -(omega |h| / 6) / (1 - omega (1/2 + e^{-gamma}/6)),

    ``omega = 6J/(1+6J)``.  The resulting profile satisfies the recursion at
    every ``x1`` (the decay rate takes care of ``|x1| >= 1``, the reflection
    identity of the branches transports ``x1 = 0`` to ``x1 = -1``).
    """
    if J <= 0:
        raise ValueError("J must be positive")
    if h >= 0:
        raise ValueError("the junction layer requires h < 0")
    gamma = solve_gamma(J)
    omega = 6.0 * J / (1.0 + 6.0 * J)
    m0 = -(omega * abs(h) / 6.0) / (1.0 - omega * (0.5 + np.exp(-gamma) / 6.0))
    return JunctionLayer(J=J, h=h, gamma=gamma, m0=float(m0))


def recursion_residual(layer: JunctionLayer, x1: int) -> float:
    """Residual of the three-point fixed-point recursion at ``x1``."""
    omega = 6.0 * layer.J / (1.0 + 6.0 * layer.J)
    m = layer.profile
    rhs = omega * (2.0 / 3.0 * m(x1) + m(x1 - 1) / 6.0 + m(x1 + 1) / 6.0)
    if x1 < 0:
        rhs -= abs(layer.h) / (1.0 + 6.0 * layer.J)
    return float(m(x1) - rhs)


# Lazy kernel of the first coordinate of the simple 3d random walk: the two
# transverse directions marginalize to a hold probability of 2/3.
_KERNEL_1D = np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])


def junction_series_oracle(J: float, h: float, x1: int, n_max: int) -> float:
    """Independent series evaluation of the junction profile.

    Sums ``-(|h|/(1+6J)) sum_{n<=n_max} omega^n P_n[first coord < 0]`` for
    the walk started at ``x1``, using exact 1d marginal step distributions.
    The truncation error is at most
    ``(|h|/(1+6J)) omega^{n_max+1} / (1 - omega)``.
    """
    if J <= 0:
        raise ValueError("J must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    omega = 6.0 * J / (1.0 + 6.0 * J)
    size = 2 * n_max + 1
    dist = np.zeros(size)
    dist[n_max] = 1.0
    below = (x1 - n_max + np.arange(size)) < 0

    total = float(dist[below].sum())
    weight = 1.0
    for _ in range(n_max):
        dist = np.convolve(dist, _KERNEL_1D, mode="same")
        weight *= omega
        total += weight * float(dist[below].sum())
    return -(abs(h) / (1.0 + 6.0 * J)) * total


def series_truncation_bound(J: float, h: float, n_max: int) -> float:
    """A-priori bound on the series oracle's truncation error."""
    omega = 6.0 * J / (1.0 + 6.0 * J)
    return (abs(h) / (1.0 + 6.0 * J)) * omega ** (n_max + 1) / (1.0 - omega)


def macroscopic_profile(r1: float, lam: float, h: float) -> float:
    """Two-plateau macroscopic magnetization ``-(lam/2) r1 + h 1[r1 < 0]``.

    Defined for ``0 < |r1| < 2``; the profile is discontinuous at ``r1 = 0``.
    """
    if r1 == 0:
        raise ValueError("the macroscopic profile is discontinuous at r1 = 0")
    if abs(r1) >= 2:
        raise ValueError(f"r1 must satisfy |r1| < 2, got {r1}")
    return -(lam / 2.0) * r1 + (h if r1 < 0 else 0.0)


def macroscopic_current(lam: float) -> float:
    """Macroscopic e1 current ``lam / 2`` (positive toward increasing x1)."""
    return lam / 2.0
