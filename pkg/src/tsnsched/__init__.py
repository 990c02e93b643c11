"""Robust time-aware schedule synthesis for integrated wired/wireless TSN."""

__version__ = "0.1.0"
