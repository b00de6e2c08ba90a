"""Differential geometry of embedded manifolds through projector fields."""

__version__ = "0.1.0"
