"""Numerical tools for square-free Fourier coefficients of cusp forms."""
__version__ = "0.1.0"
