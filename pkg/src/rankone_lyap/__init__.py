"""Lyapunov exponents of rank-one matrix ensembles."""

from ._backend import BACKEND
from .ensemble import (
    NEG_INF,
    CostMatrix,
    RankOneEnsemble,
    cost_matrix,
    load_ensemble,
    random_ensemble,
    rescale_decomposition,
    scale_ensemble,
)
from .analysis import lyapunov_exponent, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "NEG_INF",
    "CostMatrix",
    "RankOneEnsemble",
    "cost_matrix",
    "load_ensemble",
    "lyapunov_exponent",
    "random_ensemble",
    "rescale_decomposition",
    "scale_ensemble",
    "spectral_radius",
]
