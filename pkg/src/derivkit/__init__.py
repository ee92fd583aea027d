"""Toolkit for building, predicting, and analyzing datasets of
derivationally complex words in sentence context."""

__version__ = "0.1.0"
