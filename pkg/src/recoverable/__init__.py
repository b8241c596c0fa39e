"""Recoverable systems on Z^2: maximal independent sets, transfer matrices,
Glauber dynamics, the maximal hard-core model and its ground states."""

__version__ = "0.1.0"
