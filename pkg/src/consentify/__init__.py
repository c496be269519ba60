"""Finite-depth consentified choice spaces, rights-constrained economies, and their law suites."""

__version__ = "0.1.0"
