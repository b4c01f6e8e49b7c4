"""Discretized nonlocal calculus of variations: operators, energies, solvers and a preset catalog."""

__version__ = "1.0.0"
