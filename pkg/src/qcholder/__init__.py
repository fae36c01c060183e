"""Numerical lab for an extremal quasiconformal stretch of a Cantor set."""
from .exponents import ExponentSet, critical_dimension, holder_exponent, stretched_dimension
from .kernels import BACKEND

__all__ = ["BACKEND", "ExponentSet", "critical_dimension", "holder_exponent", "stretched_dimension"]
__version__ = "0.1.0"
