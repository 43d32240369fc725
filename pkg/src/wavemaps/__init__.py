"""Numerical laboratory for the (1+1)-d wave maps equation into the sphere
with Brownian-path initial data."""

__version__ = "0.1.0"
