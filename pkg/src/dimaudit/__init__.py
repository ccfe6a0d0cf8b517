"""Dimensionality diagnostics for multi-attribute rating systems."""

__version__ = "0.1.0"
