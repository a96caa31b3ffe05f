"""Diagnostics for message-passing graph neural networks."""

__version__ = "0.1.0"
