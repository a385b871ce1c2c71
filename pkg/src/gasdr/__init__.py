"""Demand response for residential natural-gas heating."""

__version__ = "0.1.0"
