"""Validation analyses: demosaicking, slanted-edge MTF, QE fitting, noise statistics."""
