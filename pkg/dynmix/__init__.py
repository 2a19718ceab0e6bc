"""Dynamic-weight Gaussian mixtures with polynomial dynamic linear models."""

__version__ = "0.1.0"
