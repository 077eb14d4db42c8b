"""Numerical laboratory for Hilbert geometry, Patterson-Sullivan densities and orbit counting."""

__version__ = "0.1.0"
