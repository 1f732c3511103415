"""Entanglement classification of two-qubit states from collective two-copy measurements."""

__version__ = "0.1.0"
