"""Desk-scale surrogate pipeline for pedestrian-level urban wind factors."""

__version__ = "0.1.0"
