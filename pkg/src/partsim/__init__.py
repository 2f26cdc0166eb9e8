"""Parallel, modular network-system simulation with conservative synchronization."""

__version__ = "0.1.0"
