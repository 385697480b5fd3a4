"""Deterministic simulation kernel for attentional control in vision."""

__version__ = "0.1.0"
