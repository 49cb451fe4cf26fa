"""Numerical toolkit for multi-pole Aharonov-Bohm operators on the plane:
exact single-pole partial-wave resolvents, Peierls-phase lattices,
low-energy exponent extraction, and local-energy wave decay."""

__version__ = "0.1.0"
