"""Whole-body motion optimization toolkit for a desk-scale humanoid."""

__version__ = "0.1.0"
