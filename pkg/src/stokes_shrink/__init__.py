"""Stokes and Navier-Stokes on a disk with a shrinking concentric hole."""

__version__ = "0.1.0"
