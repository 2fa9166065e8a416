"""Simulator and verification battery for delegated quantum computation
in the prepare-and-send and receive-and-measure settings."""

__version__ = "0.1.0"

__all__ = [
    "qcore",
    "routines",
    "simulators",
    "graphs",
    "protocols",
    "harness",
    "cli",
]
