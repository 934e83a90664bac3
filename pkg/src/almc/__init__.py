"""Compiler and reasoner for a modular action language."""

__version__ = "0.1.0"
