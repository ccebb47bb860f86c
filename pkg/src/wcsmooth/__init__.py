"""Explicit smoothing for weakly convex composite optimization."""
from . import core, smoothing, solvers, stationarity
from .errors import CapabilityError, ConvergenceError, ParameterError, SmoothnessBlowup, WCSmoothError

__version__ = "0.1.0"
