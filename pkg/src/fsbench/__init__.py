"""Embedded and filter feature selection with an SVM evaluation harness."""

__version__ = "0.1.0"
