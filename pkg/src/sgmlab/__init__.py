"""Numerical toolkit for the surface growth model ``u_t + u_xxxx + (u_x^2)_xx = 0``.

Modules: :mod:`core` (grids, trajectories, mixed norms), :mod:`kernel`
(biharmonic heat kernel), :mod:`spectral` (Fourier tools), :mod:`solver`
(time integration), :mod:`mild` (Duhamel and Picard), :mod:`diagnostics`
(regularity quantities) and :mod:`cli`.
"""
from .core import (AccuracyError, DivergenceError, DomainError, GridField, MixedExponents,
                   ParabolicCylinder, Regime, ResolutionError, ShapeError, Trajectory,
                   criticality, mixed_norm)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "DivergenceError", "DomainError", "GridField", "MixedExponents",
    "ParabolicCylinder", "Regime", "ResolutionError", "ShapeError", "Trajectory",
    "criticality", "mixed_norm",
]
