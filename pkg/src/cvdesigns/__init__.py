"""State designs in truncated Fock space: finite, rigged and regularized."""

from ._kernels import BACKEND

__version__ = "0.1.0"
