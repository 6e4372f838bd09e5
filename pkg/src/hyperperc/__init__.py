"""Percolation experiments on hyperbolic tessellations."""

__version__ = "0.1.0"
