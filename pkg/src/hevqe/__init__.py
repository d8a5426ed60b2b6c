"""Desk-scale simulation of hardware-efficient variational eigensolvers."""

__version__ = "0.1.0"
