"""Balanced Voronoi summation: exact finite identities and numeric verification."""

__version__ = "0.1.0"
