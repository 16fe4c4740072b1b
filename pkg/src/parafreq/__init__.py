"""Parabolic frequency on model Ricci flows, verified spectrally."""

__version__ = "0.1.0"
