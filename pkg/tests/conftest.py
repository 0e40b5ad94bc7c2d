"""
Shared fixtures: seeded streams, small bipartite states and the acceptance ball-gas model.
"""

import numpy as np
import pytest

from core.dynamics import build_nondegenerate_model
from core.macro import BandSpec, build_macro_partition, centered_shell
from core.sampler import SeededStream
from models.ball_gas import BallGasConfig
from models.hilbert import HilbertDims, StateVector

POSITION_BINS = BandSpec.explicit([-0.5, 1.5, 3.5, 5.5, 7.5])
ACCEPTANCE_SHELL_DIMENSION = 26


@pytest.fixture
def stream():
    return SeededStream(seed=42)


@pytest.fixture
def generator():
    return SeededStream(seed=7, stream_id=3).generator()


@pytest.fixture
def bell_state():
    return StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2.0), HilbertDims(2, 2))


@pytest.fixture
def product_state():
    first = np.array([0.6, 0.8j])
    second = np.array([1.0, 1.0, 1.0j]) / np.sqrt(3.0)
    return StateVector(np.kron(first, second), HilbertDims(2, 3))


@pytest.fixture(scope="session")
def acceptance_model():
    """L=8, one hard-core gas particle, tilt 1e-3, eta 1e-6: dimension 56."""
    config = BallGasConfig(sites=8, n_gas=1, hard_core=True, ball_hop=0.4, gas_hop=1.0, exchange_hop=0.9,
                           contact=0.5, tilt=1e-3, eta=1e-6, seed=0)
    return build_nondegenerate_model(config, tol=1e-9)


def position_partition(model):
    """Four two-site ball-position cells on the mid-spectrum shell of *model*."""
    shell = centered_shell(model.spectrum, ACCEPTANCE_SHELL_DIMENSION)
    return build_macro_partition(shell, model.basis.ball_position_operator(), POSITION_BINS)


@pytest.fixture(scope="session")
def partition_for():
    return position_partition


@pytest.fixture(scope="session")
def acceptance_partition(acceptance_model):
    return position_partition(acceptance_model)
