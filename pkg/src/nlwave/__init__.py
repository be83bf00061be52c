"""Numerical laboratory for a wave equation with quadratic gradient nonlinearity
and the recovery of its time-dependent coefficient from boundary data."""

from .errors import *  # noqa: F401,F403
from .grid import (
    CoefficientSet,
    RemainderSpec,
    SpaceTimeGrid,
    SpaceTimeScalarField,
    SpaceTimeVectorField,
)
from .linear import InitialBoundaryData, discrete_energy, solve_linear_ibvp

__version__ = "0.1.0"
