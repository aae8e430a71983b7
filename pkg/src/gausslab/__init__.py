"""Numerical laboratory for Gauss-type maps and their transfer operators."""

__version__ = "0.1.0"
