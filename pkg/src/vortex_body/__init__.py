"""Rigid body moving in a two-dimensional perfect fluid, simulated with vortex particles."""

__version__ = "0.1.0"
