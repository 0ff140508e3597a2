"""Computational workbench for n-optimal sets, unit equations and log-energy
minimisation in rings of integers of quadratic fields."""

__version__ = "0.1.0"
