"""Spectral camera simulation: scene radiance, lens optics, sensor, analysis."""

__version__ = "0.1.0"
