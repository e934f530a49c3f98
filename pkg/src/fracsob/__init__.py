"""Regional fractional Sobolev quotients on domains, half-spaces and whole space."""

from .constants import a_const, c0, kappa, kernel_constants
from .domains import Ball, Box, Difference, GraphEpigraph, HalfBall, HalfSpace, WholeSpace
from .fields import Analytic, Grid, Sampled, make_grid
from .forms import QuotientReport, energy, hardy_defect, localization_defect, quotient
from .lab import ScanResult, StraightenMap
from .params import FracParams, make_params
from .reference import reference_quotient
from .solver import SolverConfig, SolverState, solve

__version__ = "0.1.0"

__all__ = [
    "a_const", "c0", "kappa", "kernel_constants",
    "Ball", "Box", "Difference", "GraphEpigraph", "HalfBall", "HalfSpace", "WholeSpace",
    "Analytic", "Grid", "Sampled", "make_grid",
    "QuotientReport", "energy", "hardy_defect", "localization_defect", "quotient",
    "ScanResult", "StraightenMap",
    "FracParams", "make_params", "reference_quotient",
    "SolverConfig", "SolverState", "solve",
]
