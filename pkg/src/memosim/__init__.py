"""Ternary signed-digit adders in memristor/CMOS ratioed logic."""

__version__ = "0.1.0"
