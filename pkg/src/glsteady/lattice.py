"""Lattice geometry: finite cores, reservoir half-spaces, neighbor structure.

Two driven geometries are supported, each a finite core embedded in an
ambient set that also contains two infinite half-space reservoirs:

* ``darken``: two adjacent blocks (a doped one and a clean one) forming the
  box ``-2N <= x1 <= 2N-1``, ``-N <= x2, x3 < N``; the reservoirs fill the
  full half-spaces ``x1 < -2N`` and ``x1 >= 2N``.
* ``channel``: a thin tube ``|x1| < N``, ``|x2|, |x3| <= M`` joining the
  half-spaces ``x1 <= -N`` and ``x1 >= N``.

A ``full_space`` domain (no core, every site ambient) is provided for
free-walk reference computations.  Half-spaces are never enumerated:
ambient membership is evaluated on the fly, vectorized over site arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

Site = tuple[int, int, int]

# The six nearest-neighbor offsets, in fixed order (+e1, -e1, +e2, -e2, +e3, -e3).
NEIGHBOR_OFFSETS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=np.int64,
)

# Positive-direction offsets used to enumerate each bond exactly once.
BOND_OFFSETS = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.int64)


@dataclass
class SiteSet:
    """A labelled collection of lattice sites (``sites`` is an (k, 3) array)."""

    label: str
    sites: np.ndarray


class LatticeDomain:
    """A finite core plus implicit ambient membership for the half-spaces.

    The core is enumerated once, in lexicographic ``(x1, x2, x3)`` order,
    which fixes the site indexing used by all matrix assembly downstream.
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, kind: str, N: int | None = None, M: int | None = None):
        if kind not in ("darken", "channel", "full_space"):
            raise ValueError(f"unknown domain kind {kind!r}")
        self.kind = kind
        self.N = N
        self.M = M

        if kind == "darken":
            lo = np.array([-2 * N, -N, -N], dtype=np.int64)
            hi = np.array([2 * N - 1, N - 1, N - 1], dtype=np.int64)
        elif kind == "channel":
            lo = np.array([-(N - 1), -M, -M], dtype=np.int64)
            hi = np.array([N - 1, M, M], dtype=np.int64)
        else:
            lo = np.array([0, 0, 0], dtype=np.int64)
            hi = np.array([-1, -1, -1], dtype=np.int64)  # empty core
        self._lo = lo
        self._hi = hi
        self._shape = np.maximum(hi - lo + 1, 0)

        n = int(np.prod(self._shape))
        if n > 0:
            axes = [np.arange(lo[d], hi[d] + 1, dtype=np.int64) for d in range(3)]
            grid = np.meshgrid(*axes, indexing="ij")
            self.core = np.stack([g.ravel() for g in grid], axis=1)
        else:
            self.core = np.zeros((0, 3), dtype=np.int64)

        self._build_degrees()
        self._build_bonds()

    # -- membership -------------------------------------------------------

    def _core_mask(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= self._lo) & (pts <= self._hi), axis=1)

    def contains(self, points) -> bool | np.ndarray:
        """Ambient membership (core or either half-space)."""
        pts = np.asarray(points, dtype=np.int64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if self.kind == "full_space":
            out = np.ones(len(pts), dtype=bool)
        elif self.kind == "darken":
            out = (pts[:, 0] < -2 * self.N) | (pts[:, 0] >= 2 * self.N) | self._core_mask(pts)
        else:
            out = (pts[:, 0] <= -self.N) | (pts[:, 0] >= self.N) | self._core_mask(pts)
        return bool(out[0]) if single else out

    def in_core(self, points) -> bool | np.ndarray:
        pts = np.asarray(points, dtype=np.int64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = self._core_mask(pts) if self.core.size else np.zeros(len(pts), dtype=bool)
        return bool(out[0]) if single else out

    def reservoir_side(self, points) -> np.ndarray:
        """-1 for the left half-space, +1 for the right one, 0 otherwise."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
        side = np.zeros(len(pts), dtype=np.int8)
        if self.kind == "darken":
            side[pts[:, 0] < -2 * self.N] = -1
            side[pts[:, 0] >= 2 * self.N] = 1
        elif self.kind == "channel":
            side[pts[:, 0] <= -self.N] = -1
            side[pts[:, 0] >= self.N] = 1
        return side

    def core_index(self, points):
        """Lexicographic index of core site(s); raises for non-core sites."""
        pts = np.asarray(points, dtype=np.int64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if not bool(np.all(self._core_mask(pts))):
            raise ValueError("site outside the finite core")
        rel = pts - self._lo
        idx = (rel[:, 0] * self._shape[1] + rel[:, 1]) * self._shape[2] + rel[:, 2]
        return int(idx[0]) if single else idx

    @property
    def n_sites(self) -> int:
        return len(self.core)

    # -- neighbor structure -------------------------------------------------

    def _build_degrees(self):
        n = self.n_sites
        self.k_ambient = np.zeros(n, dtype=np.int64)
        self.k_core = np.zeros(n, dtype=np.int64)
        self.n_reservoir_left = np.zeros(n, dtype=np.int64)
        self.n_reservoir_right = np.zeros(n, dtype=np.int64)
        if n == 0:
            return
        for off in NEIGHBOR_OFFSETS:
            p = self.core + off
            amb = self.contains(p)
            inc = self.in_core(p)
            self.k_ambient += amb
            self.k_core += inc
            side = self.reservoir_side(p)
            self.n_reservoir_left += amb & ~inc & (side == -1)
            self.n_reservoir_right += amb & ~inc & (side == 1)

    def _build_bonds(self):
        """Enumerate core-core bonds once each, by axis then site order."""
        bi, bj, ax = [], [], []
        for d in range(3):
            p = self.core + BOND_OFFSETS[d]
            mask = self.in_core(p) if self.n_sites else np.zeros(0, dtype=bool)
            if np.any(mask):
                bi.append(np.flatnonzero(mask))
                bj.append(self.core_index(p[mask]))
                ax.append(np.full(int(mask.sum()), d, dtype=np.int64))
        if bi:
            self.bonds_i = np.concatenate(bi)
            self.bonds_j = np.concatenate(bj)
            self.bond_axis = np.concatenate(ax)
        else:
            self.bonds_i = np.zeros(0, dtype=np.int64)
            self.bonds_j = np.zeros(0, dtype=np.int64)
            self.bond_axis = np.zeros(0, dtype=np.int64)

    def neighbors(self, x: Site) -> list[tuple[Site, bool]]:
        """Ambient neighbors of ``x`` with an ``in_core`` flag each."""
        pt = np.asarray(x, dtype=np.int64)
        if not self.contains(pt):
            raise ValueError(f"site {tuple(int(v) for v in pt)} is not in the ambient set")
        nbrs = pt + NEIGHBOR_OFFSETS
        keep = self.contains(nbrs)
        flags = self.in_core(nbrs)
        return [
            (tuple(int(v) for v in nbrs[k]), bool(flags[k]))
            for k in range(6)
            if keep[k]
        ]


def build_darken_domain(N: int) -> LatticeDomain:
    """Two-block geometry of side 2N, reservoirs beyond ``x1 = -2N`` and ``2N-1``."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    return LatticeDomain("darken", N=int(N))


def build_channel_domain(N: int, M: int) -> LatticeDomain:
    """Tube of half-length N and half-width M between two half-space reservoirs.

    Requires ``1 <= M < N``.  The reservoir analysis needs the tube much
    narrower than long (M of order ``N**alpha`` with ``alpha < 1/2``); wider
    tubes are accepted with a warning so that small instances stay testable.
    """
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    if M >= N:
        raise ValueError(f"M must be smaller than N (got M={M}, N={N})")
    if M * M >= N:
        warnings.warn(
            f"M={M} >= sqrt(N={N}): outside the narrow-channel regime "
            "(kept for small-instance testing)",
            stacklevel=2,
        )
    return LatticeDomain("channel", N=int(N), M=int(M))


def build_full_space_domain() -> LatticeDomain:
    """The full integer lattice (no core); used for free-walk references."""
    return LatticeDomain("full_space")


def neighbors(domain: LatticeDomain, x: Site) -> list[tuple[Site, bool]]:
    return domain.neighbors(x)


def section_sites(domain: LatticeDomain, x1: int) -> np.ndarray:
    """All core sites with first coordinate ``x1``."""
    mask = domain.core[:, 0] == x1
    if not np.any(mask):
        raise ValueError(f"empty section x1={x1}")
    return domain.core[mask]


def site_sets(domain: LatticeDomain) -> dict[str, SiteSet]:
    """Named boundary/section site sets of a finite domain.

    For the darken geometry: the driven left face ``x1 = -2N`` and right
    face ``x1 = 2N-1`` (both inside the core).  For the channel: the two
    contact screens ``sigma+`` / ``sigma-`` (first reservoir planes facing
    the tube, outside the core) and every vertical section.
    """
    out: dict[str, SiteSet] = {}
    if domain.kind == "darken":
        n = domain.N
        for label, x1 in (("left-face", -2 * n), ("right-face", 2 * n - 1)):
            out[label] = SiteSet(label, section_sites(domain, x1))
    elif domain.kind == "channel":
        n, m = domain.N, domain.M
        t = np.arange(-m, m + 1, dtype=np.int64)
        g2, g3 = np.meshgrid(t, t, indexing="ij")
        flat2, flat3 = g2.ravel(), g3.ravel()
        for label, x1 in (("sigma+", n), ("sigma-", -n)):
            sites = np.stack([np.full(flat2.size, x1, dtype=np.int64), flat2, flat3], axis=1)
            out[label] = SiteSet(label, sites)
        for x1 in range(-(n - 1), n):
            label = f"section({x1})"
            out[label] = SiteSet(label, section_sites(domain, x1))
    else:
        raise ValueError("site sets are defined for the darken and channel geometries")
    return out
