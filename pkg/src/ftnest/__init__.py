"""Faster-than-Nyquist BPSK simulation and blind packing-ratio estimation."""

from .errors import CapacityError, FormatError, FtnError, GridError, ParameterError, UnreachableTargetError

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "FormatError", "FtnError", "GridError", "ParameterError", "UnreachableTargetError",
]
