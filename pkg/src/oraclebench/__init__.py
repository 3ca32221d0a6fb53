"""Numerical testbench for swap-style oracle constructions, keyed pseudorandom
candidates built on them, and singular-value-threshold distinguishers."""

__version__ = "0.1.0"
