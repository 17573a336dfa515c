"""Weighted active-passive consensus for heterogeneous distributed sensing."""

__version__ = "0.1.0"
