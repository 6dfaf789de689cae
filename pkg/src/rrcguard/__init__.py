"""Autoencoder intrusion detection for RRC signaling storms, gradient
evasion attacks against it, and an attribution-distribution guard."""

from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
