"""Simulator for a mechanosensitive metasheet that learns force patterns.

Bistable domes sense force, an analog chain turns dome inversions into
memristor write pulses, and the accumulated memristance changes become the
weights of a small Hopfield network.
"""
from .errors import (CalibrationError, ConfigError, ExtractionError, GeometryError, InputError,
                     SimulationError)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CalibrationError", "ConfigError", "ExtractionError", "GeometryError",
    "InputError", "SimulationError", "__version__",
]
