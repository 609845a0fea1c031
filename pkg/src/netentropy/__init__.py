"""Entropy evolution in classical and quantum consensus dynamics and gossip."""

__version__ = "0.1.0"
