"""Iwasawa continued fractions: exact and floating-point toolkit."""

__version__ = "0.1.0"
