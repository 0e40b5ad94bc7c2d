"""
Concentration of reduced-density-matrix entries for uniform random pure states.

Theoretical side: Levy-type bounds on the sphere S^{2 n1 n2 - 1},

    expectation form  P(|f - E f| >= eps) <= exp(-n1 n2 (eps - delta)^2 / ||f||_L^2),
                      delta = (pi / (4 n1 n2))^{1/2} ||f||_L,  eps > delta
    median form       P(|f - m f| >= eps) <= exp(-n1 n2 eps^2 / ||f||_L^2)

with ||f||_L = 2 for Re(rho_1)_{jj} and 1 for Re/Im(rho_1)_{jk}, j != k
(the gradient bounds ||grad||^2 <= 4 and <= 1). Off-diagonal entries have
median = expectation = 0, so they use the median form without a delta shift.

Empirical side: Monte Carlo exceedance frequencies over an epsilon grid.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import configs
from exceptions import BoundDomainError, ConfigError, DimensionOverflowError, IndexRangeError
from models.hilbert import HilbertDims, StateVector
from core.sampler import SeededStream, block_sizes, sample_uniform_amplitudes
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)


class DeviationKind(str, Enum):
    """Which entry of rho_1 is tested, and against what"""
    DIAGONAL_RE = "diagonal_re"
    OFF_DIAGONAL_RE = "off_diagonal_re"
    OFF_DIAGONAL_IM = "off_diagonal_im"


class EntryPart(str, Enum):
    RE = "re"
    IM = "im"


class BoundForm(str, Enum):
    EXPECTATION = "expectation"
    MEDIAN = "median"
    TRIVIAL = "trivial"


# Lipschitz norms of the rho_1 entries on the unit sphere
LIPSCHITZ_NORMS: Dict[DeviationKind, float] = {
    DeviationKind.DIAGONAL_RE: 2.0,
    DeviationKind.OFF_DIAGONAL_RE: 1.0,
    DeviationKind.OFF_DIAGONAL_IM: 1.0,
}


# ========================================================================
# Theoretical bounds
# ========================================================================

def levy_delta(n1: int, n2: int, lipschitz_norm: float = 1.0) -> float:
    """delta = (pi / (4 n1 n2))^{1/2} * ||f||_L."""
    return math.sqrt(math.pi / (4.0 * n1 * n2)) * lipschitz_norm


@dataclass(frozen=True)
class LevyBoundParams:
    """Inputs of a Levy bound for a function with Lipschitz norm ``lipschitz_norm``."""

    n1: int
    n2: int
    epsilon: float
    lipschitz_norm: float

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError(f"n1 and n2 must be >= 1, got ({self.n1}, {self.n2})")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.lipschitz_norm <= 0:
            raise ConfigError(f"lipschitz_norm must be > 0, got {self.lipschitz_norm}")

    @property
    def delta(self) -> float:
        return levy_delta(self.n1, self.n2, self.lipschitz_norm)

    def bound(self, form: BoundForm = BoundForm.EXPECTATION) -> float:
        n = self.n1 * self.n2
        scale = self.lipschitz_norm ** 2
        if form == BoundForm.MEDIAN:
            return math.exp(-n * self.epsilon ** 2 / scale)
        if form == BoundForm.TRIVIAL:
            return 1.0
        if self.epsilon <= self.delta:
            raise BoundDomainError("expectation-form bound does not apply", epsilon=self.epsilon, delta=self.delta)
        return math.exp(-n * (self.epsilon - self.delta) ** 2 / scale)


def general_levy_bound(n1: int, n2: int, epsilon: float, lipschitz_norm: float,
                       form: BoundForm = BoundForm.EXPECTATION) -> float:
    """Bound on P(|f - E f| >= eps) (expectation form) or P(|f - m f| >= eps) (median form)."""
    return LevyBoundParams(n1, n2, epsilon, lipschitz_norm).bound(form)


def levy_bound(kind: DeviationKind, n1: int, n2: int, epsilon: float) -> float:
    """
    Concentration bound for one rho_1 entry.

    DIAGONAL_RE: exp(-(n1 n2 / 4)(eps - delta)^2), delta = 2 (pi / (4 n1 n2))^{1/2}.
    OFF_DIAGONAL_RE / OFF_DIAGONAL_IM: exp(-n1 n2 eps^2).

    Raises:
        BoundDomainError: DIAGONAL_RE with eps <= delta.
    """
    kind = DeviationKind(kind)
    form = BoundForm.EXPECTATION if kind == DeviationKind.DIAGONAL_RE else BoundForm.MEDIAN
    return general_levy_bound(n1, n2, epsilon, LIPSCHITZ_NORMS[kind], form)


def _bound_or_trivial(kind: DeviationKind, n1: int, n2: int, epsilon: float) -> Tuple[float, BoundForm]:
    try:
        bound = levy_bound(kind, n1, n2, epsilon)
    except BoundDomainError:
        return 1.0, BoundForm.TRIVIAL
    form = BoundForm.EXPECTATION if kind == DeviationKind.DIAGONAL_RE else BoundForm.MEDIAN
    return bound, form


# ========================================================================
# Gradients of rho_1 entries
# ========================================================================

def _check_indices(dims: HilbertDims, j1: int, k1: int) -> None:
    for index in (j1, k1):
        if not 0 <= index < dims.n1:
            raise IndexRangeError(f"index {index} outside subsystem 1 of dimension {dims.n1}")


def reduced_entry(amplitudes: np.ndarray, dims: HilbertDims, j1: int, k1: int,
                  part: EntryPart = EntryPart.RE) -> float:
    """
    Re or Im of sum_{l2} c_{j1,l2} c*_{k1,l2} for raw amplitudes.

    The amplitudes need not be normalised; this is the quadratic form on
    R^{2 n1 n2} whose gradient ``gradient_of_reduced_entry`` returns.
    """
    _check_indices(dims, j1, k1)
    coefficients = np.asarray(amplitudes, dtype=np.complex128).reshape(dims.n1, dims.n2)
    value = np.dot(coefficients[j1], coefficients[k1].conj())
    return float(value.real if EntryPart(part) == EntryPart.RE else value.imag)


def gradient_of_reduced_entry(state: StateVector, dims: Optional[HilbertDims], j1: int, k1: int,
                              part: EntryPart = EntryPart.RE) -> np.ndarray:
    """
    Analytic gradient of Re/Im(rho_1)_{j1,k1} with respect to the real coordinates.

    With c = c' + i c'', the output is (d/dc'_{l1,l2}, d/dc''_{l1,l2}) flattened
    lexicographically: n1*n2 real-part components followed by n1*n2
    imaginary-part components.

        Re: ( delta_{l1,j1} c'_{k1,l2} + c'_{j1,l2} delta_{l1,k1},
              delta_{l1,j1} c''_{k1,l2} + c''_{j1,l2} delta_{l1,k1} )
        Im: ( c''_{j1,l2} delta_{l1,k1} - delta_{l1,j1} c''_{k1,l2},
              delta_{l1,j1} c'_{k1,l2} - c'_{j1,l2} delta_{l1,k1} )
    """
    dims = dims or state.dims
    coefficients = state.coefficient_matrix(dims)
    _check_indices(dims, j1, k1)
    real, imag = coefficients.real, coefficients.imag
    grad_real = np.zeros((dims.n1, dims.n2))
    grad_imag = np.zeros((dims.n1, dims.n2))
    if EntryPart(part) == EntryPart.RE:
        grad_real[j1] += real[k1]
        grad_real[k1] += real[j1]
        grad_imag[j1] += imag[k1]
        grad_imag[k1] += imag[j1]
    else:
        grad_real[k1] += imag[j1]
        grad_real[j1] -= imag[k1]
        grad_imag[j1] += real[k1]
        grad_imag[k1] -= real[j1]
    return np.concatenate([grad_real.ravel(), grad_imag.ravel()])


def gradient_norm_squared(state: StateVector, dims: Optional[HilbertDims], j1: int, k1: int,
                          part: EntryPart = EntryPart.RE) -> float:
    """
    Closed form sum_{l2}(|c_{j1,l2}|^2 + |c_{k1,l2}|^2) +/- 2 delta_{j1,k1} sum_{l2} |c_{j1,l2}|^2
    (plus sign for Re, minus for Im).
    """
    dims = dims or state.dims
    coefficients = state.coefficient_matrix(dims)
    _check_indices(dims, j1, k1)
    row_j = float(np.sum(np.abs(coefficients[j1]) ** 2))
    row_k = float(np.sum(np.abs(coefficients[k1]) ** 2))
    sign = 1.0 if EntryPart(part) == EntryPart.RE else -1.0
    return row_j + row_k + (2.0 * sign * row_j if j1 == k1 else 0.0)


def estimate_lipschitz_norm(n1: int, n2: int, j1: int, k1: int, part: EntryPart,
                            samples: int, stream: SeededStream) -> float:
    """Largest gradient norm of Re/Im(rho_1)_{j1,k1} seen over *samples* uniform states."""
    dims = HilbertDims(n1, n2)
    _check_indices(dims, j1, k1)
    amplitudes = sample_uniform_amplitudes(dims.total, samples, stream.generator())
    rows = np.abs(amplitudes.reshape(samples, n1, n2)) ** 2
    row_j = rows[:, j1].sum(axis=1)
    row_k = rows[:, k1].sum(axis=1)
    norms_sq = row_j + row_k
    if j1 == k1:
        norms_sq = norms_sq + (2.0 if EntryPart(part) == EntryPart.RE else -2.0) * row_j
    return float(np.sqrt(np.max(np.clip(norms_sq, 0.0, None))))


# ========================================================================
# Monte Carlo experiment
# ========================================================================

@dataclass(frozen=True)
class ConcentrationRow:
    """Empirical exceedance vs. theoretical bound for one (kind, epsilon)."""

    kind: DeviationKind
    epsilon: float
    exceedances: int
    trials: int
    bound: float
    bound_form: BoundForm

    @property
    def empirical(self) -> float:
        return self.exceedances / self.trials

    @property
    def stderr(self) -> float:
        """Binomial standard error of a frequency whose true value sits at the bound."""
        return math.sqrt(self.bound * (1.0 - self.bound) / self.trials)

    def within_bound(self, sigmas: float = 3.0) -> bool:
        return self.empirical <= self.bound + sigmas * self.stderr


@dataclass(frozen=True)
class ConcentrationReport:
    """Result of ``run_concentration_experiment``."""

    n1: int
    n2: int
    trials: int
    seed: int
    stream_id: int
    epsilon_grid: Tuple[float, ...]
    rows: Tuple[ConcentrationRow, ...]
    diagonal_index: int
    off_diagonal_pair: Tuple[int, int]
    mean_rho: np.ndarray = field(repr=False)
    mean_rho_distance: float = 0.0
    mean_trial_distance: float = 0.0
    max_deviation: Dict[DeviationKind, float] = field(default_factory=dict)

    def row(self, kind: DeviationKind, epsilon: float) -> ConcentrationRow:
        for row in self.rows:
            if row.kind == kind and row.epsilon == epsilon:
                return row
        raise KeyError(f"no row for ({kind}, {epsilon})")

    def violations(self, sigmas: float = 3.0) -> List[ConcentrationRow]:
        return [row for row in self.rows if not row.within_bound(sigmas)]

    def worst_ratio(self) -> float:
        """Largest empirical / bound over rows with a non-trivial bound."""
        ratios = [row.empirical / row.bound for row in self.rows
                  if row.bound_form != BoundForm.TRIVIAL and row.bound > 0]
        return max(ratios, default=0.0)


def _validate_grid(epsilon_grid: Sequence[float]) -> Tuple[float, ...]:
    grid = tuple(float(eps) for eps in epsilon_grid)
    if not grid:
        raise ConfigError("epsilon grid must not be empty")
    if any(eps <= 0 for eps in grid):
        raise ConfigError(f"epsilon grid values must be > 0, got {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"epsilon grid must be strictly increasing, got {grid}")
    return grid


def run_concentration_experiment(n1: int, n2: int, trials: int, epsilon_grid: Sequence[float],
                                 stream: SeededStream, threads: int = 1,
                                 diagonal_index: int = 0,
                                 off_diagonal_pair: Tuple[int, int] = (0, 1)) -> ConcentrationReport:
    """
    Sample *trials* uniform states on C^{n1} (x) C^{n2} and compare the
    frequency of |deviation| >= eps with the Levy bounds.

    Deviations: Re(rho_1)_{jj} - 1/n1 for the diagonal entry, Re and Im of
    (rho_1)_{jk} for the off-diagonal pair (skipped when n1 == 1). Grid points
    where the expectation-form bound does not apply get the trivial bound 1.

    Args:
        n1, n2: Subsystem dimensions.
        trials: Number of sampled states (>= 100).
        epsilon_grid: Strictly increasing positive thresholds.
        stream: Seeded stream; Monte Carlo block b uses ``stream.block_generator(b)``.
        threads: Worker threads; the report does not depend on it.
        diagonal_index: j for the DIAGONAL_RE entry.
        off_diagonal_pair: (j, k), j != k, for the off-diagonal kinds.
    """
    dims = HilbertDims(n1, n2)
    if trials < 100:
        raise ConfigError(f"trials must be >= 100, got {trials}")
    if dims.total > configs.DIMENSION_CAP:
        raise DimensionOverflowError("n1*n2 is too large", dimension=dims.total, cap=configs.DIMENSION_CAP)
    grid = _validate_grid(epsilon_grid)
    j_diag = diagonal_index
    j_off, k_off = off_diagonal_pair
    _check_indices(dims, j_diag, j_diag)
    kinds = [DeviationKind.DIAGONAL_RE]
    if n1 >= 2:
        _check_indices(dims, j_off, k_off)
        if j_off == k_off:
            raise ConfigError("off-diagonal kinds require j != k")
        kinds += [DeviationKind.OFF_DIAGONAL_RE, DeviationKind.OFF_DIAGONAL_IM]
    thresholds = np.asarray(grid)
    sizes = block_sizes(trials)
    identity = np.eye(n1) / n1

    def _block(index: int):
        size = sizes[index]
        amplitudes = sample_uniform_amplitudes(dims.total, size, stream.block_generator(index))
        coefficients = amplitudes.reshape(size, n1, n2)
        rhos = np.einsum("bjl,bkl->bjk", coefficients, coefficients.conj())
        deviations = [rhos[:, j_diag, j_diag].real - 1.0 / n1]
        if n1 >= 2:
            deviations += [rhos[:, j_off, k_off].real, rhos[:, j_off, k_off].imag]
        magnitudes = np.abs(np.stack(deviations))
        counts = (magnitudes[:, :, None] >= thresholds[None, None, :]).sum(axis=1)
        distances = np.linalg.norm(rhos - identity[None], axis=(1, 2))
        return counts, rhos.sum(axis=0), float(distances.sum()), magnitudes.max(axis=1)

    results = ordered_map(_block, range(len(sizes)), threads)
    counts = np.zeros((len(kinds), len(grid)), dtype=np.int64)
    rho_sum = np.zeros((n1, n1), dtype=np.complex128)
    distance_sum = 0.0
    max_dev = np.zeros(len(kinds))
    for block_counts, block_rho, block_distance, block_max in results:
        counts += block_counts
        rho_sum += block_rho
        distance_sum += block_distance
        max_dev = np.maximum(max_dev, block_max)

    rows = []
    for k_index, kind in enumerate(kinds):
        for e_index, eps in enumerate(grid):
            bound, form = _bound_or_trivial(kind, n1, n2, eps)
            rows.append(ConcentrationRow(kind, eps, int(counts[k_index, e_index]), trials, bound, form))
    mean_rho = rho_sum / trials
    report = ConcentrationReport(
        n1=n1, n2=n2, trials=trials, seed=stream.seed, stream_id=stream.stream_id,
        epsilon_grid=grid, rows=tuple(rows),
        diagonal_index=j_diag, off_diagonal_pair=(j_off, k_off),
        mean_rho=mean_rho,
        mean_rho_distance=float(np.linalg.norm(mean_rho - identity)),
        mean_trial_distance=distance_sum / trials,
        max_deviation={kind: float(max_dev[i]) for i, kind in enumerate(kinds)},
    )
    logger.info(f"Concentration n1={n1} n2={n2} trials={trials}: "
                f"{len(report.violations())} rows above bound, mean-rho distance {report.mean_rho_distance:.3e}")
    return report


def factor_pairs(total: int) -> List[Tuple[int, int]]:
    """All (n1, n2) with n1 * n2 == total and n1 >= 2."""
    return [(n1, total // n1) for n1 in range(2, total + 1) if total % n1 == 0]


def run_factorization_scan(total: int, trials: int, epsilon_grid: Sequence[float],
                           stream: SeededStream, threads: int = 1) -> List[ConcentrationReport]:
    """Concentration experiment for every factorisation n1 * n2 = total; only the product sets the bound."""
    reports = []
    for offset, (n1, n2) in enumerate(factor_pairs(total)):
        sub_stream = SeededStream(stream.seed, stream.stream_id + offset)
        reports.append(run_concentration_experiment(n1, n2, trials, epsilon_grid, sub_stream, threads))
    return reports
