"""Verification toolkit for a family of smooth steady Euler flows localized near a circle."""

__version__ = "0.1.0"
