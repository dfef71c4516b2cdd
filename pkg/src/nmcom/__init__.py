"""Desk-scale laboratory for constant-round non-malleable commitments."""

__version__ = "0.1.0"
