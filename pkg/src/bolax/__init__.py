"""Numerical laboratory for the zero-dispersion limit of the Benjamin-Ono equation on the torus."""

__version__ = "0.1.0"
