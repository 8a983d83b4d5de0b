"""Operator Gabor g-frames on C^N x C^N and best K-term operator approximation."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateFit, DimensionMismatch, MalformedOperatorFile, NotAFrame,
                     NotMonotone, OpCoorbitError, ZeroReference)
from .finite_tf import Lattice, LatticePoint, Weight, gaussian_window, stft, tf_shift
from .hs_ops import CoefficientField, FrameSystem, OperatorWindow
from .kernels import BACKEND
from .rng import RngStream

__all__ = [
    "__version__", "BACKEND",
    "ConfigError", "DegenerateFit", "DimensionMismatch", "MalformedOperatorFile", "NotAFrame",
    "NotMonotone", "OpCoorbitError", "ZeroReference",
    "Lattice", "LatticePoint", "Weight", "gaussian_window", "stft", "tf_shift",
    "CoefficientField", "FrameSystem", "OperatorWindow", "RngStream",
]
