"""Coalgebra automata over a grammar of set functors."""

__version__ = "0.1.0"
