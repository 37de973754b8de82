"""Imperfect-recall abstractions of extensive-form games with solution-quality bounds."""

__version__ = "0.1.0"
