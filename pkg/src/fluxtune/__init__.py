"""Simulator for a two-SQUID artificial atom with flux-tunable coupling to a resonator."""

__version__ = "0.1.0"
