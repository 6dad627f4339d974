"""Simple exclusion on Galton-Watson trees: tagged-particle simulation and checks."""

__version__ = "0.1.0"
