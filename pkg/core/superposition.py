"""
Schmidt decomposition, macro-branch weights and the spin-pointer measurement model.

Pointer convention: the device is N spins starting in |0>. Outcome + rotates
every spin by +theta about y, outcome - by -theta, with
R(phi)|0> = (cos(phi/2), sin(phi/2)). The per-spin overlap is cos(theta), so
the branch overlap is |cos(theta)|^N. The qubit outcome + is basis state 0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

import configs
from core.dynamics import BallGasBasis, QetTimeSeries, shell_coordinates
from core.hilbert import partial_trace, von_neumann_entropy
from core.macro import MacroPartition
from exceptions import ConfigError, DimensionOverflowError, InvariantViolationError
from models.hilbert import HilbertDims, StateVector

logger = logging.getLogger(__name__)


# ========================================================================
# Schmidt decomposition
# ========================================================================

@dataclass(frozen=True)
class SchmidtDecomposition:
    """psi = sum_k lambda_k u_k (x) v_k, lambda descending."""

    coefficients: np.ndarray
    left_vectors: np.ndarray = field(repr=False)
    right_vectors: np.ndarray = field(repr=False)
    dims: HilbertDims

    def __post_init__(self):
        total = float(np.sum(self.coefficients ** 2))
        if abs(total - 1.0) > configs.PROJECTOR_TOL:
            raise InvariantViolationError("squared Schmidt coefficients do not sum to 1",
                                          quantity="sum_lambda_squared", value=total,
                                          tolerance=configs.PROJECTOR_TOL)

    def reconstruct(self) -> StateVector:
        matrix = (self.left_vectors * self.coefficients) @ self.right_vectors.T
        return StateVector(matrix.reshape(-1), self.dims)

    def schmidt_rank(self, tol: float = configs.PROJECTOR_TOL) -> int:
        return int(np.count_nonzero(self.coefficients > tol))

    def entanglement_entropy(self) -> float:
        """-sum lambda^2 ln lambda^2 in nats."""
        weights = self.coefficients ** 2
        weights = weights[weights > 0.0]
        return float(-np.sum(weights * np.log(weights)))


def schmidt_decompose(state: StateVector, dims: Optional[HilbertDims] = None) -> SchmidtDecomposition:
    """SVD of the coefficient matrix c_{j1,j2}; coefficients come out descending."""
    matrix = state.coefficient_matrix(dims)
    left, singular, right_h = scipy.linalg.svd(matrix, full_matrices=False)
    return SchmidtDecomposition(singular, left, right_h.T, dims or state.dims)


# ========================================================================
# Macro branches
# ========================================================================

@dataclass(frozen=True)
class BranchProfile:
    """Cell weights of a state and how many cells count as occupied branches."""

    labels: Tuple[str, ...]
    weights: np.ndarray
    threshold: float
    branch_count: int

    @property
    def is_superposition(self) -> bool:
        return self.branch_count >= 2


def default_threshold(targets: np.ndarray) -> float:
    """Half the smallest typical weight, 0.5 * min d_nu/D."""
    return 0.5 * float(np.min(targets))


def _check_threshold(threshold: float, cells: int) -> None:
    # at or below 1/C the heaviest of C cells always reaches the threshold
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"branch threshold must lie in (0, 1), got {threshold}")
    if threshold > 1.0 / cells:
        raise ConfigError(f"branch threshold {threshold} exceeds 1/{cells}; a profile could have no branch")


def _count_branches(weights: np.ndarray, threshold: float) -> np.ndarray:
    return (weights >= threshold - configs.WEIGHT_SUM_TOL).sum(axis=-1)


def branch_profile(state: StateVector, partition: MacroPartition, threshold: Optional[float] = None,
                   project: bool = False) -> BranchProfile:
    """
    Weights <psi|P_nu|psi> per macro cell and the number of cells above *threshold*.

    Raises:
        ShellLeakageError: the state leaves the shell and ``project`` is off.
    """
    threshold = default_threshold(partition.targets) if threshold is None else threshold
    _check_threshold(threshold, len(partition.labels))
    coordinates, _ = shell_coordinates(state, partition, project)
    weights = partition.weights(coordinates)
    defect = abs(float(weights.sum()) - 1.0)
    if defect > configs.WEIGHT_SUM_TOL:
        raise InvariantViolationError("branch weights do not sum to 1", quantity="weight_sum_defect",
                                      value=defect, tolerance=configs.WEIGHT_SUM_TOL)
    return BranchProfile(tuple(partition.labels), weights, threshold, int(_count_branches(weights, threshold)))


def branch_counts(series: QetTimeSeries, threshold: Optional[float] = None) -> np.ndarray:
    """Branch count at every sampled time of a weight time series."""
    threshold = default_threshold(series.targets) if threshold is None else threshold
    _check_threshold(threshold, series.weights.shape[-1])
    return _count_branches(series.weights, threshold)


# ========================================================================
# Pointer measurement model
# ========================================================================

@dataclass(frozen=True)
class PointerModel:
    """Qubit c+|+> + c-|-> measured by N spins rotated by +-theta."""

    n_spins: int
    theta: float
    c_plus: complex = 1.0 / math.sqrt(2.0)
    c_minus: complex = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if self.n_spins < 1:
            raise ConfigError(f"n_spins must be >= 1, got {self.n_spins}")
        norm = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if abs(norm - 1.0) > configs.NORM_TOL:
            raise InvariantViolationError("qubit amplitudes are not normalised", quantity="norm_squared",
                                          value=norm, tolerance=configs.NORM_TOL)


def rotated_spin(phi: float) -> np.ndarray:
    """R_y(phi)|0>."""
    return np.array([math.cos(phi / 2.0), math.sin(phi / 2.0)], dtype=np.complex128)


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = math.cos(phi / 2.0), math.sin(phi / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class PointerState:
    """
    c+ |+> (x) M+ + c- |-> (x) M-, with M+- stored as per-spin records.

    Large N never materialises 2^(N+1) amplitudes; ``to_dense`` does so for small N.
    """

    c_plus: complex
    c_minus: complex
    plus_records: np.ndarray = field(repr=False)
    minus_records: np.ndarray = field(repr=False)

    @property
    def n_spins(self) -> int:
        return self.plus_records.shape[0]

    def branch_inner_product(self) -> complex:
        """<M+|M-> as the product of per-spin inner products."""
        return complex(np.prod(self._per_spin_overlaps()))

    def log_branch_overlap(self) -> float:
        """ln|<M+|M->| summed per spin; finite where the product itself underflows."""
        with np.errstate(divide="ignore"):
            return float(np.sum(np.log(np.abs(self._per_spin_overlaps()))))

    def _per_spin_overlaps(self) -> np.ndarray:
        return np.einsum("ki,ki->k", self.plus_records.conj(), self.minus_records)

    def norm(self) -> float:
        plus = float(np.prod(np.sum(np.abs(self.plus_records) ** 2, axis=1)))
        minus = float(np.prod(np.sum(np.abs(self.minus_records) ** 2, axis=1)))
        return math.sqrt(abs(self.c_plus) ** 2 * plus + abs(self.c_minus) ** 2 * minus)

    def reduced_qubit_matrix(self) -> np.ndarray:
        """Qubit state after tracing out the device; coherences carry the factor <M-|M+>."""
        overlap = self.branch_inner_product()
        coherence = self.c_plus * np.conj(self.c_minus) * np.conj(overlap)
        return np.array([[abs(self.c_plus) ** 2, coherence],
                         [np.conj(coherence), abs(self.c_minus) ** 2]], dtype=np.complex128)

    def to_dense(self, cap: int = configs.DIMENSION_CAP) -> StateVector:
        """Qubit-major amplitude vector with dims (2, 2^N)."""
        dimension = 2 ** (self.n_spins + 1)
        if dimension > cap:
            raise DimensionOverflowError("pointer state too large to materialise", dimension=dimension, cap=cap)
        plus, minus = np.ones(1, dtype=np.complex128), np.ones(1, dtype=np.complex128)
        for up, down in zip(self.plus_records, self.minus_records):
            plus, minus = np.kron(plus, up), np.kron(minus, down)
        return StateVector(np.concatenate([self.c_plus * plus, self.c_minus * minus]),
                           HilbertDims(2, 2 ** self.n_spins))


def pointer_measure(model: PointerModel) -> Tuple[PointerState, float]:
    """
    Apply the controlled product rotation to (c+|+> + c-|->) (x) |0...0>.

    Returns:
        (entangled final state, branch overlap |<M+|M->|)
    """
    plus = np.tile(rotated_spin(model.theta), (model.n_spins, 1))
    minus = np.tile(rotated_spin(-model.theta), (model.n_spins, 1))
    state = PointerState(complex(model.c_plus), complex(model.c_minus), plus, minus)
    norm = state.norm()
    if abs(norm - 1.0) > configs.NORM_TOL:
        raise InvariantViolationError("pointer state lost normalisation", quantity="norm",
                                      value=norm, tolerance=configs.NORM_TOL)
    overlap = abs(state.branch_inner_product())
    logger.debug(f"Pointer measurement: N={model.n_spins}, theta={model.theta}, overlap={overlap:.6e}")
    return state, overlap


def controlled_rotation_unitary(n_spins: int, theta: float, cap: int = configs.DIMENSION_CAP) -> np.ndarray:
    """|0><0| (x) R(theta)^{(x)N} + |1><1| (x) R(-theta)^{(x)N} as a dense matrix."""
    dimension = 2 ** (n_spins + 1)
    if dimension > cap:
        raise DimensionOverflowError("controlled rotation too large to materialise", dimension=dimension, cap=cap)
    plus, minus = np.ones((1, 1), dtype=np.complex128), np.ones((1, 1), dtype=np.complex128)
    for _ in range(n_spins):
        plus = np.kron(plus, rotation_matrix(theta))
        minus = np.kron(minus, rotation_matrix(-theta))
    return scipy.linalg.block_diag(plus, minus)


def overlap_curve(theta: float, n_values: Sequence[int]) -> np.ndarray:
    """|cos theta|^N for every N."""
    return np.abs(math.cos(theta)) ** np.asarray(n_values, dtype=float)


def overlap_decay_rate(theta: float) -> float:
    """-ln|cos theta|: overlap = exp(-rate * N)."""
    c = abs(math.cos(theta))
    return math.inf if c == 0.0 else -math.log(c)


# ========================================================================
# Entanglement over time
# ========================================================================

def branch_purity_series(states: Sequence[StateVector], dims: Optional[HilbertDims] = None) -> np.ndarray:
    """Entanglement entropy (nats) of rho_1 for every state."""
    return np.array([von_neumann_entropy(partial_trace(state, dims or state.dims)) for state in states])


def ball_gas_entropy_series(basis: BallGasBasis, states: Sequence[StateVector]) -> np.ndarray:
    """Ball-gas entanglement entropy of each model state."""
    embedded: List[StateVector] = [basis.embed_product_space(state.amplitudes) for state in states]
    return branch_purity_series(embedded)
