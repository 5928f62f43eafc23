"""Temporal-mode-selective frequency conversion and two-stage Ramsey interferometry."""

__version__ = "0.1.0"
