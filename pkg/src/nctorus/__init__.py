"""Connes-Landi deformations of the flat 2-torus at desk scale."""

__version__ = "0.1.0"
