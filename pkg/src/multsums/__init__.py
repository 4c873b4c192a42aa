"""Multiplicative functions with small partial sums: computational toolkit."""

__version__ = "0.1.0"
