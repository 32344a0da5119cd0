"""Equilibrium measures of Riesz gases with radially symmetric potentials."""

__version__ = "0.1.0"
