"""Effective boundary conditions for 1D Hamilton-Jacobi equations on the half-line.

Submodules
----------
pwl      piecewise-linear functions with linear tails
limiter  set limiters, limited fluxes and the effective flux of a boundary function
testfn   tabulated coupling test function and its verification
solver   monotone finite-difference scheme and the comparison experiments
"""
from ._backend import BACKEND
from .errors import HJHalfError
from .limiter import (SetLimiter, build_flux, compute_A0, compute_set_limiter, effective_flux,
                      slope_bounds, validate_set_limiter)
from .presets import preset
from .pwl import PLFunction, bln_flux, crossings, decreasing_envelope, inverse_monotone

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HJHalfError",
    "PLFunction",
    "SetLimiter",
    "bln_flux",
    "build_flux",
    "compute_A0",
    "compute_set_limiter",
    "crossings",
    "decreasing_envelope",
    "effective_flux",
    "inverse_monotone",
    "preset",
    "slope_bounds",
    "validate_set_limiter",
]
