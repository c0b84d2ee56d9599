"""Top-level package for the parametric CSI feedback simulator."""
