"""Polarized direct cross-attention message passing for multivariate-signal fault diagnosis."""

__version__ = "0.1.0"
