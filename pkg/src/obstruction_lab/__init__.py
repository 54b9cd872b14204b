"""Numerical lab for almost-flat bundles over tori built from almost representations of Z^d."""

__version__ = "0.1.0"
