"""
Domain Models Package
Hilbert-space value types, the ball-gas model configuration and experiment results.
"""

from .hilbert import (
    DensityMatrix,
    HermitianOperator,
    HilbertDims,
    SpectralDecomposition,
    StateVector,
)
from .ball_gas import BallGasConfig, GasStatistics
from .reports import ExperimentResult, InvariantCheck, ReportTable

__all__ = [
    "HilbertDims", "StateVector", "DensityMatrix", "HermitianOperator", "SpectralDecomposition",
    "BallGasConfig", "GasStatistics",
    "ExperimentResult", "InvariantCheck", "ReportTable",
]
