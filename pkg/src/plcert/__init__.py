"""Exact certification toolkit for continuous piecewise-linear interval maps."""

__version__ = "0.1.0"
