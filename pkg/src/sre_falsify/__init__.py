"""Falsifying ADT method implementations against symbolic regular expression specs."""

__version__ = "0.1.0"
