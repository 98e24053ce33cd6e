"""Hierarchical federated learning over a social network with mobility."""

__version__ = "0.1.0"
