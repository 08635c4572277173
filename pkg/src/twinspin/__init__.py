"""Simulation of the spin-1 twin experiment: measurement zones, no-collapse
circuits, signed separable decompositions and hidden-variable samplers."""

__version__ = "0.1.0"
