"""Frechet means and stickiness diagnostics on stratified metric cones."""

from . import asymptotics, frechet, spaces, stickiness, transport

__all__ = ["spaces", "frechet", "stickiness", "transport", "asymptotics"]
__version__ = "0.1.0"
