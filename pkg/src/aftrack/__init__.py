"""Kalman tracking with amplify-and-forward sensors over a coherent MAC.

Modules: ``model`` (scenario types and sampling), ``linalg`` (Hermitian
helpers), ``sdp`` (small dense SDP solver), ``allocate`` (gain allocation),
``track`` (Kalman recursion), ``outage`` (equal-power outage probability),
``harness`` (Monte Carlo sweeps) and ``cli``.
"""
from .errors import NumericalError, ValidationError
from .model import ChannelRealization, GainAllocation, GaussMarkovModel, NetworkScenario, preset

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "GainAllocation",
    "GaussMarkovModel",
    "NetworkScenario",
    "NumericalError",
    "ValidationError",
    "preset",
]
