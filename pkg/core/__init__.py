"""Core functionality for the parametric CSI feedback simulator."""

__version__ = "0.1.0"
