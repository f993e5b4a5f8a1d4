"""Secure PAC learning over noisy classical and BB84 label channels."""

__version__ = "0.1.0"
