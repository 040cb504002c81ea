"""Deterministic prospective-memory training engine and analytics."""

__version__ = "0.1.0"
