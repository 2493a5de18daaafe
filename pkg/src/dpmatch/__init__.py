"""Differentially private implicit matchings on graphs."""

__version__ = "0.1.0"
