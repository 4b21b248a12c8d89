"""Projective geometry of one-dimensional systems of conservation laws."""
__version__ = "0.1.0"
