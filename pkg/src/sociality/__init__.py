"""Bayesian sociality models for undirected binary networks."""

__version__ = "0.1.0"
