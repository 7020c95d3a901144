"""Transparent boundary conditions for lattice Boltzmann schemes."""

__version__ = "0.1.0"
