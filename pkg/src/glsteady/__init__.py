"""Steady states of boundary-driven quadratic Ginzburg-Landau lattice models."""

__version__ = "0.1.0"

from .lattice import (
    build_channel_domain,
    build_darken_domain,
    build_full_space_domain,
)
from .model import ModelParams, ScalarField, assemble

__all__ = [
    "build_darken_domain",
    "build_channel_domain",
    "build_full_space_domain",
    "ModelParams",
    "ScalarField",
    "assemble",
    "__version__",
]
