"""Continuous-time forward-backward and gradient flows with decay certificates."""

__version__ = "0.1.0"

from . import analysis, certificates, flows, integrate, operators, problems

__all__ = [
    "analysis",
    "certificates",
    "flows",
    "integrate",
    "operators",
    "problems",
    "__version__",
]
