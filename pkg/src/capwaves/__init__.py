"""Pseudo-spectral laboratory for two-dimensional capillary water waves."""

__version__ = "0.1.0"
