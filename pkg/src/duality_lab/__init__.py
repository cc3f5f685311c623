"""Numerical toolkit for wave-particle duality relations."""

from .entropy import CertifiedValue, half_norm, hmax, hmin, pguess, psecr
from .errors import DualityLabError, NoConvergence
from .interferometer import (
    Interferometer,
    WhichPathCoupling,
    detection_distribution,
    path_distinguishability,
    propagate,
    visibility_n,
)
from .quantum import POVM, CQState, DensityOperator, PureState, fourier_matrix
from .wpdr import RELATION_IDS, RelationReport

__version__ = "0.1.0"

__all__ = [
    "CQState",
    "CertifiedValue",
    "DensityOperator",
    "DualityLabError",
    "Interferometer",
    "NoConvergence",
    "POVM",
    "PureState",
    "RELATION_IDS",
    "RelationReport",
    "WhichPathCoupling",
    "detection_distribution",
    "fourier_matrix",
    "half_norm",
    "hmax",
    "hmin",
    "path_distinguishability",
    "pguess",
    "psecr",
    "propagate",
    "visibility_n",
]
