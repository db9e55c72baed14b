"""Temporal and static landscape analysis of surrogate-assisted multi-objective optimisation."""

__version__ = "0.1.0"
