"""Numerical toolkit for dephasing-covariant coherence theory and its
maximally correlated entanglement counterpart."""

__version__ = "0.1.0"
