"""Closed and open Hegselmann-Krause opinion dynamics with disagreement functionals."""

__version__ = "0.1.0"
