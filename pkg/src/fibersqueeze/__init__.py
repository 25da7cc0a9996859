"""Quantum noise of fibre solitons: polarisation squeezing with Raman and phase noise.

Truncated-Wigner and positive-P stochastic propagation of the scaled
nonlinear Schroedinger equation with a phonon-bank Raman response, Stokes
moment estimation, and detection-loss / excess-phase-noise corrections.
"""

__version__ = "0.1.0"

from .params import FiberSpec, PulseSpec, ScaledParams, derive_scaled, fiber_preset
from .grid import Grid, make_grid
from .ensemble import RunConfig, PointResult, run_point, sweep_energy, sweep_length

__all__ = [
    "FiberSpec", "PulseSpec", "ScaledParams", "derive_scaled", "fiber_preset",
    "Grid", "make_grid", "RunConfig", "PointResult", "run_point", "sweep_energy", "sweep_length",
]
