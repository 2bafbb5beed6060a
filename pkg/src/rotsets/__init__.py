"""Rotation-set estimation for random compositions of torus homeomorphisms."""

__version__ = "0.1.0"
