"""Flowpipe reachability for networks of constant-rate hybrid automata."""

__version__ = "0.1.0"
