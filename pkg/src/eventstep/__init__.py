"""Adaptive local timestepping for 1D conservation laws as a discrete event
simulation, with trace verification, an optimistic parallel executor, and a
work/speed-up model."""

__version__ = "0.1.0"
