"""Weak measurement with a quantum delayed-choice beam splitter, and its
optomechanical realization: analytic model, brute-force oracle and CLI."""

__version__ = "0.1.0"
