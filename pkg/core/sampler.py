"""
Uniform (Haar) sampling of pure states on the unit sphere S^{2 dim - 1}.

Generator algorithm: Philox4x64-10 (numpy ``Philox``), keyed by
``SeedSequence(seed, spawn_key=(stream_id,))`` for a stream and
``SeedSequence(seed, spawn_key=(stream_id, block))`` for its Monte Carlo blocks.
Counter-based keys make every (seed, stream_id, block) an independent,
reproducible stream.

Each sample draws 2*dim standard normals in one call: the first dim are the
real parts, the last dim the imaginary parts; the vector is then normalised.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

import configs
from exceptions import InvariantViolationError
from models.hilbert import StateVector
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeededStream:
    """A reproducible random stream identified by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InvariantViolationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise InvariantViolationError(f"stream_id must be non-negative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(sequence))

    def block_generator(self, block: int) -> np.random.Generator:
        """Generator for Monte Carlo block *block* of this stream."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, block))
        return np.random.Generator(np.random.Philox(sequence))


RandomSource = Union[SeededStream, np.random.Generator]


def _as_generator(source: RandomSource) -> np.random.Generator:
    if isinstance(source, SeededStream):
        return source.generator()
    return source


def _check_dim(dim: int) -> None:
    if dim < 1:
        raise InvariantViolationError(f"state dimension must be >= 1, got {dim}")


def sample_uniform_amplitudes(dim: int, count: int, generator: np.random.Generator) -> np.ndarray:
    """
    Draw *count* uniformly distributed unit vectors in C^dim.

    Returns:
        Complex array of shape (count, dim); every row has unit norm.
    """
    _check_dim(dim)
    normals = generator.standard_normal((count, 2 * dim))
    vectors = normals[:, :dim] + 1j * normals[:, dim:]
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def sample_uniform_state(dim: int, stream: RandomSource) -> StateVector:
    """
    One state from the uniform measure on S^{2 dim - 1}.

    A ``SeededStream`` always yields the first state of its sequence; pass a
    generator (or use ``iter_uniform_states``) to walk the sequence.
    """
    return StateVector(sample_uniform_amplitudes(dim, 1, _as_generator(stream))[0])


def iter_uniform_states(dim: int, stream: RandomSource) -> Iterator[StateVector]:
    """Endless reproducible sequence of uniform states."""
    generator = _as_generator(stream)
    while True:
        yield StateVector(sample_uniform_amplitudes(dim, 1, generator)[0])


def block_sizes(trials: int, block_size: int = configs.MC_BLOCK_SIZE) -> list:
    """Split *trials* into fixed-size blocks; the last block takes the remainder."""
    full, remainder = divmod(trials, block_size)
    return [block_size] * full + ([remainder] if remainder else [])


def estimate_coefficient_moments(dim: int, trials: int, stream: SeededStream,
                                 threads: int = 1) -> np.ndarray:
    """
    Empirical second moments M_{ab} = E[c_a c*_b] over *trials* uniform states.

    Args:
        dim: State dimension.
        trials: Number of sampled states (>= 1).
        stream: Seeded stream; block b uses ``stream.block_generator(b)``.
        threads: Worker threads; the result does not depend on it.

    Returns:
        dim x dim complex matrix; diagonal ~ 1/dim, off-diagonal ~ 0.
    """
    _check_dim(dim)
    if trials < 1:
        raise InvariantViolationError(f"trials must be >= 1, got {trials}")
    sizes = block_sizes(trials)

    def _block(index: int) -> np.ndarray:
        amplitudes = sample_uniform_amplitudes(dim, sizes[index], stream.block_generator(index))
        return amplitudes.T @ amplitudes.conj()

    partial_sums = ordered_map(_block, range(len(sizes)), threads)
    logger.debug(f"Moment estimate: dim={dim}, trials={trials}, blocks={len(sizes)}")
    total = np.zeros((dim, dim), dtype=np.complex128)
    for block_sum in partial_sums:
        total += block_sum
    return total / trials


def random_unitary(dim: int, stream: RandomSource) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with the R-diagonal phases removed."""
    _check_dim(dim)
    generator = _as_generator(stream)
    ginibre = (generator.standard_normal((dim, dim)) + 1j * generator.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(ginibre)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases
