"""Numerical toolkit for sigma_k-Yamabe metrics on radial conformally compact balls."""

from .geometry import Family, WarpedBackground, beta0, c_kn
from .grid import GridFunction, RadialGrid
from .operator import SigmaProblem, indicial_roots, linearize, residual
from .solver import (
    SolverParams,
    continuation,
    fredholm_probe,
    intersection_check,
    newton_solve,
)

__version__ = "0.1.0"

__all__ = [
    "Family",
    "WarpedBackground",
    "beta0",
    "c_kn",
    "GridFunction",
    "RadialGrid",
    "SigmaProblem",
    "indicial_roots",
    "linearize",
    "residual",
    "SolverParams",
    "continuation",
    "fredholm_probe",
    "intersection_check",
    "newton_solve",
]
