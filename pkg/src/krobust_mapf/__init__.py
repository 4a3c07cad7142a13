"""Optimal k-robust multi-agent path finding with symmetry reasoning."""

__version__ = "0.1.0"
