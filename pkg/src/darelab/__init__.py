"""Simulation library for communication-efficient Byzantine agreement on long values."""

from .model import ParamError, ProtocolParams, Value

__all__ = ["ParamError", "ProtocolParams", "Value"]
__version__ = "0.1.0"
