"""Integrability workbench for dispersionless Hirota-type equations."""

__version__ = "0.1.0"
