"""Collective bosonization of the mean-field Fermi gas on the integer lattice."""

__version__ = "0.1.0"
