"""Steady states of parameterized master equations and their exact gradients."""

__version__ = "0.1.0"
