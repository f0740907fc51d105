"""Dynamical-decoupling sequence design and spin-chain bath simulation."""

__version__ = "0.1.0"
