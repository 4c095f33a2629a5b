"""Regularized reconstruction of a nonlinear elliptic sideways problem from interior data.

Modules
-------
grid_spectral    grids, the discrete continuous-Fourier transform, norms, CSV I/O
kernels          closed-form kernels and their transforms
forward_solver   exterior problem on y > 1 and the derivative trace
cauchy_harmonic  spectral-cutoff solution of the harmonic Cauchy problem
nonlinear_cauchy truncated integral operator for the nonlinear remainder
harness          manufactured problems, noise, studies and output files
cli              command-line front end
"""

from .errors import (
    ConfigError,
    GridError,
    InsufficientRows,
    InvalidEpsilon,
    InvalidSource,
    NoConvergence,
    NonContractive,
    SidewaysError,
    SingularPointError,
)
from .grid_spectral import Grid1D, Grid2D, GridFunction, Spectrum, SpectralField
from .reports import SolveReport

__all__ = [
    "ConfigError",
    "GridError",
    "InsufficientRows",
    "InvalidEpsilon",
    "InvalidSource",
    "NoConvergence",
    "NonContractive",
    "SidewaysError",
    "SingularPointError",
    "Grid1D",
    "Grid2D",
    "GridFunction",
    "Spectrum",
    "SpectralField",
    "SolveReport",
]
