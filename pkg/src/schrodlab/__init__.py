"""Numerical laboratory for divergence of the Schrodinger maximal function
along band-limited lattice data."""

__version__ = "0.1.0"
