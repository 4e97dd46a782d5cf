"""Deterministic shared-autonomy driving simulator and arbitration engine."""

__version__ = "0.1.0"
