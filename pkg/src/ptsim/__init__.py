"""Simulation of PT-symmetric two-level dynamics, EP holonomies and their
four-level atomic embedding."""

__version__ = "0.1.0"
