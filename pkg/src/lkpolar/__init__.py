"""Polar codes with large binary kernels decoded through Arikan windows."""

from .gf2 import BitMatrix, SingularMatrix
from .kernelalg import Kernel, WindowProfile, window_profile
from .cost import ComplexityProfile, kernel_cost
from .permsearch import search, select_best
from .windec import PolarCodeSpec, decode, encode, sc_decode, scl_decode

__version__ = "0.1.0"

__all__ = [
    "BitMatrix",
    "SingularMatrix",
    "Kernel",
    "WindowProfile",
    "window_profile",
    "ComplexityProfile",
    "kernel_cost",
    "search",
    "select_best",
    "PolarCodeSpec",
    "decode",
    "encode",
    "sc_decode",
    "scl_decode",
]
