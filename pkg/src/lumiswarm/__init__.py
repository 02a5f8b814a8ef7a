"""Luminous-robot mutual visibility: protocols, schedulers and verification."""

__version__ = "0.1.0"
