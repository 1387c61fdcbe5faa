"""Quadratic Hamiltonian assembly for the boundary-driven lattice field.

The energy of a configuration ``phi`` on the finite core, with the
reservoirs frozen at constant values, is (up to a configuration-independent
constant)

    H(phi) = 1/2 <phi, (D - A) phi> - <b, phi>

where ``D`` is diagonal with entries ``1 + J K_x`` (``K_x`` the ambient
degree), ``A`` couples core neighbors with strength ``J``, and the linear
field ``b`` collects the bulk field, the chemical-potential tilt and the
frozen boundary couplings.  ``D - A`` is strictly diagonally dominant, so
the model always has a unique Gaussian equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeDomain, Site


@dataclass
class ModelParams:
    """Physical parameters.

    ``h`` is the bulk field applied on the doped (left) block of the darken
    geometry; it must be non-positive.  ``lam`` is the amplitude of the
    boundary chemical potentials.  Unset reservoir values default to
    ``lam + h`` (left) and ``-lam`` (right) for the darken geometry and to
    zero for the channel comparison model.
    """

    J: float = 1.0
    beta: float = 1.0
    h: float = 0.0
    lam: float = 0.0
    phi_bar_left: float | None = None
    phi_bar_right: float | None = None

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError(f"coupling J must be positive, got {self.J}")
        if self.beta <= 0:
            raise ValueError(f"inverse temperature beta must be positive, got {self.beta}")
        if self.h > 0:
            raise ValueError(f"bulk field h must be <= 0, got {self.h}")

    def boundary_values(self, kind: str) -> tuple[float, float]:
        if kind == "channel":
            default = (0.0, 0.0)
        else:
            default = (self.lam + self.h, -self.lam)
        left = default[0] if self.phi_bar_left is None else self.phi_bar_left
        right = default[1] if self.phi_bar_right is None else self.phi_bar_right
        return float(left), float(right)


@dataclass
class ScalarField:
    """One real value per core site, indexed like the domain's core array."""

    domain: LatticeDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.domain.n_sites,):
            raise ValueError(
                f"field length {self.values.shape} does not match core size {self.domain.n_sites}"
            )

    def at(self, x: Site) -> float:
        return float(self.values[self.domain.core_index(x)])

    def __len__(self) -> int:
        return self.values.size


def lambda_profile_darken(domain: LatticeDomain, lam: float) -> ScalarField:
    """Linear chemical-potential tilt for the darken geometry.

    Interpolates from ``+lam`` at ``x1 = -2N-1`` to ``-lam`` at ``x1 = 2N``,
    i.e. ``-lam (2 x1 + 1) / (4N + 1)``; the per-bond drop along e1 is
    ``2 lam / (4N + 1)``.
    """
    if domain.kind != "darken":
        raise ValueError("darken tilt requires a darken domain")
    x1 = domain.core[:, 0].astype(np.float64)
    return ScalarField(domain, -lam * (2.0 * x1 + 1.0) / (4.0 * domain.N + 1.0))


def lambda_profile_channel(domain: LatticeDomain, lam: float) -> ScalarField:
    """Linear tilt ``-lam * x1 / N`` for the channel geometry."""
    if domain.kind != "channel":
        raise ValueError("channel tilt requires a channel domain")
    x1 = domain.core[:, 0].astype(np.float64)
    return ScalarField(domain, -lam * x1 / float(domain.N))


@dataclass
class QuadraticModel:
    """Assembled quadratic model: D diagonal, A adjacency, b linear field."""

    domain: LatticeDomain
    params: ModelParams
    diag: np.ndarray
    adjacency: sp.csr_matrix
    b: np.ndarray
    tilt: np.ndarray
    bulk_field: np.ndarray
    boundary_values: tuple[float, float]

    @property
    def n(self) -> int:
        return self.diag.size

    def d_minus_a(self) -> sp.csr_matrix:
        return sp.diags(self.diag) - self.adjacency

    @property
    def b_untilted(self) -> np.ndarray:
        """Linear field without the tilt (bulk field plus boundary couplings)."""
        return self.b - self.tilt

    def gradient(self, phi: np.ndarray) -> np.ndarray:
        """Gradient of the tilted energy: (D - A) phi - b."""
        return self.diag * phi - self.adjacency @ phi - self.b

    def gradient_untilted(self, phi: np.ndarray) -> np.ndarray:
        """Gradient of the untilted energy: (D - A) phi - (b - tilt)."""
        return self.diag * phi - self.adjacency @ phi - self.b_untilted


def assemble(
    domain: LatticeDomain,
    params: ModelParams,
    tilt: ScalarField | None = None,
    bulk_field: ScalarField | None = None,
) -> QuadraticModel:
    """Build D, A and b on a finite domain.

    The bulk field defaults to ``h`` on ``x1 < 0`` for the darken geometry
    and to zero for the channel; the tilt defaults to the geometry's linear
    profile.  Passing explicit fields overrides either choice (they must
    live on the same domain).
    """
    if domain.n_sites == 0:
        raise ValueError("cannot assemble a model on a domain without a finite core")
    if tilt is None:
        if domain.kind == "darken":
            tilt = lambda_profile_darken(domain, params.lam)
        else:
            tilt = lambda_profile_channel(domain, params.lam)
    if tilt.domain is not domain:
        raise ValueError("tilt is defined on a different domain")
    if bulk_field is None:
        if domain.kind == "darken":
            field_values = np.where(domain.core[:, 0] < 0, params.h, 0.0)
        else:
            field_values = np.zeros(domain.n_sites)
        bulk_field = ScalarField(domain, field_values)
    if bulk_field.domain is not domain:
        raise ValueError("bulk field is defined on a different domain")

    J = params.J
    diag = 1.0 + J * domain.k_ambient.astype(np.float64)
    n = domain.n_sites
    i = np.concatenate([domain.bonds_i, domain.bonds_j])
    j = np.concatenate([domain.bonds_j, domain.bonds_i])
    adjacency = sp.csr_matrix(
        (np.full(i.size, J, dtype=np.float64), (i, j)), shape=(n, n)
    )

    left, right = params.boundary_values(domain.kind)
    b = (
        bulk_field.values
        + tilt.values
        + J * (left * domain.n_reservoir_left + right * domain.n_reservoir_right)
    )
    return QuadraticModel(
        domain=domain,
        params=params,
        diag=diag,
        adjacency=adjacency,
        b=b,
        tilt=tilt.values.copy(),
        bulk_field=bulk_field.values.copy(),
        boundary_values=(left, right),
    )


def hamiltonian_value(model: QuadraticModel, phi) -> float:
    """Energy of a configuration: ``1/2 <phi,(D-A)phi> - <b,phi>``."""
    v = phi.values if isinstance(phi, ScalarField) else np.asarray(phi, dtype=np.float64)
    quad = v @ (model.diag * v - model.adjacency @ v)
    return float(0.5 * quad - model.b @ v)
