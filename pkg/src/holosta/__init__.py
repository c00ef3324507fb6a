"""Noncyclic holonomic single-qubit gates on a resonant Lambda system,
inverse-engineered from a Lewis-Riesenfeld invariant."""

__version__ = "0.1.0"
