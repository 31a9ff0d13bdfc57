"""Continuous-variable randomized oblivious transfer against bounded noisy storage.

The package models an EPR-pair quadrature link, certifies min-entropy
rates through entropic uncertainty bounds, reconciles binned outcomes
with a non-binary LDPC code, amplifies with Toeplitz hashing, and runs
the whole exchange as a two-party wire protocol.
"""

from .core import (CvotError, DecodeFailure, DiscretizationScheme,
                   EpsilonBudget, InfeasibleBudget, InfeasibleRate,
                   InsufficientData, InvalidParams, MemoryAssumption,
                   ProtocolAbort, SeededRng)
from .gaussmodel import (ChannelStats, CovarianceMatrix, SourceModel,
                         channel_stats, duan_value, epr_covariance)
from .rateengine import RateInputs, RateResult, secure_length
from .protocol import SessionParams, run_rot, run_rot_tcp

__version__ = "0.1.0"

__all__ = [
    "CvotError", "DecodeFailure", "DiscretizationScheme", "EpsilonBudget",
    "InfeasibleBudget", "InfeasibleRate", "InsufficientData", "InvalidParams",
    "MemoryAssumption", "ProtocolAbort", "SeededRng",
    "ChannelStats", "CovarianceMatrix", "SourceModel", "channel_stats",
    "duan_value", "epr_covariance",
    "RateInputs", "RateResult", "secure_length",
    "SessionParams", "run_rot", "run_rot_tcp",
    "__version__",
]
