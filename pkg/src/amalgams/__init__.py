"""Workbench for amalgamated free products, small-cancellation
quotients, ordinal pair-colorings, and a finite-stage tower simulator."""

__version__ = "0.1.0"
