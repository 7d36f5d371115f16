"""Decoupled Q-networks: bang-bang discretization with a linearly decomposed critic."""

__version__ = "0.1.0"
