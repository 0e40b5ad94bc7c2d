"""
Ball-and-gas lattice model, exact-diagonalization evolution and time-fraction
statistics of macro-cell weights.

Units: hbar = 1; energies in units of the Hamiltonian, times in inverse energy.
Evolution is exact in the eigenbasis, psi(t) = sum_n exp(-i E_n t) <phi_n|psi0> phi_n.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.integrate
import scipy.linalg

import configs
from core.hilbert import expectation
from core.macro import MacroPartition
from core.sampler import SeededStream
from exceptions import (
    ConfigError,
    DimensionMismatchError,
    DimensionOverflowError,
    InvariantViolationError,
    ShellLeakageError,
    SpectrumError,
)
from models.ball_gas import BallGasConfig, GasStatistics
from models.hilbert import HermitianOperator, HilbertDims, SpectralDecomposition, StateVector
from utils.parallel import ordered_map
from utils.validation import hermitize

logger = logging.getLogger(__name__)

GasConfiguration = Tuple[int, ...]


# ========================================================================
# Basis enumeration
# ========================================================================

def _gas_configurations(free_sites: Sequence[int], n_gas: int, statistics: GasStatistics) -> List[GasConfiguration]:
    if statistics == GasStatistics.DISTINGUISHABLE:
        return list(itertools.permutations(free_sites, n_gas))
    return list(itertools.combinations(free_sites, n_gas))


@dataclass(frozen=True)
class BallGasBasis:
    """
    Ordered basis |Q, x_1..x_n> of the ball-gas model, ball position major.

    Distinguishable gas particles carry ordered position tuples; hard-core
    bosons carry sorted tuples. Gas particles never share a site, and with
    ``hard_core`` they never sit on the ball's site either.
    """

    config: BallGasConfig
    states: Tuple[Tuple[int, GasConfiguration], ...]
    _lookup: Dict[Tuple[int, GasConfiguration], int] = field(repr=False, compare=False)

    @classmethod
    def build(cls, config: BallGasConfig) -> "BallGasBasis":
        states = []
        for ball in range(config.sites):
            free = [s for s in range(config.sites) if not (config.hard_core and s == ball)]
            states.extend((ball, gas) for gas in _gas_configurations(free, config.n_gas, config.statistics))
        lookup = {state: i for i, state in enumerate(states)}
        return cls(config, tuple(states), lookup)

    @property
    def dim(self) -> int:
        return len(self.states)

    def index_of(self, ball: int, gas: Sequence[int]) -> int:
        key = (ball, tuple(gas))
        if self.config.statistics == GasStatistics.HARDCORE_BOSONS:
            key = (ball, tuple(sorted(gas)))
        try:
            return self._lookup[key]
        except KeyError:
            raise KeyError(f"({ball}, {tuple(gas)}) is not a basis state of this model") from None

    def contains(self, ball: int, gas: GasConfiguration) -> bool:
        return (ball, gas) in self._lookup

    def ball_position_operator(self) -> HermitianOperator:
        """Diagonal operator Q with the ball's lattice site on the diagonal."""
        return HermitianOperator(np.diag([float(ball) for ball, _ in self.states]), units="sites")

    def product_dims(self) -> HilbertDims:
        """Ball (x) gas tensor space; the gas factor counts configurations over all L sites."""
        all_sites = range(self.config.sites)
        count = len(_gas_configurations(all_sites, self.config.n_gas, self.config.statistics))
        return HilbertDims(self.config.sites, count)

    def embed_product_space(self, amplitudes: np.ndarray) -> StateVector:
        """Place model amplitudes in the ball (x) gas tensor space, zero on excluded configurations."""
        amplitudes = np.asarray(amplitudes)
        if amplitudes.shape != (self.dim,):
            raise DimensionMismatchError("amplitudes do not match the model basis", expected=self.dim,
                                         actual=amplitudes.shape[0] if amplitudes.ndim else 0)
        dims = self.product_dims()
        gas_index = {gas: j for j, gas in enumerate(
            _gas_configurations(range(self.config.sites), self.config.n_gas, self.config.statistics))}
        embedded = np.zeros(dims.total, dtype=np.complex128)
        for i, (ball, gas) in enumerate(self.states):
            embedded[ball * dims.n2 + gas_index[gas]] = amplitudes[i]
        return StateVector(embedded, dims)


# ========================================================================
# Hamiltonian
# ========================================================================

def _check_dimension(config: BallGasConfig) -> int:
    dimension = config.dimension
    if dimension > config.dimension_cap:
        raise DimensionOverflowError("ball-gas model is too large", dimension=dimension, cap=config.dimension_cap)
    return dimension


def build_ball_gas_hamiltonian(config: BallGasConfig, basis: Optional[BallGasBasis] = None) -> HermitianOperator:
    """
    H = H_B + H_G + H_BG on the ball-gas basis.

    Ball and gas hop between nearest neighbours on an open chain with
    amplitude -t. The ball feels V(Q) = v*Q; with ``hard_core`` the ball and
    the gas exclude each other, otherwise each gas particle on the ball's
    site costs U_X. H_BG also lets a gas particle next to the ball hop over
    it to the mirrored site (amplitude -t_X) and charges U_C for every gas
    particle adjacent to the ball. A uniform diagonal perturbation in
    (-eta, eta), drawn from the model seed, lifts accidental degeneracies.

    Raises:
        DimensionOverflowError: the basis would exceed ``config.dimension_cap``.
    """
    dimension = _check_dimension(config)
    basis = basis or BallGasBasis.build(config)
    bosons = config.statistics == GasStatistics.HARDCORE_BOSONS
    matrix = np.zeros((dimension, dimension), dtype=np.complex128)

    def add_gas_move(row: int, ball: int, gas: GasConfiguration, k: int, target: int, amplitude: float) -> None:
        if not 0 <= target < config.sites or target in gas:
            return
        moved = gas[:k] + (target,) + gas[k + 1:]
        if bosons:
            moved = tuple(sorted(moved))
        if basis.contains(ball, moved):
            matrix[basis.index_of(ball, moved), row] += -amplitude

    for i, (ball, gas) in enumerate(basis.states):
        diagonal = config.tilt * ball
        diagonal += config.contact * sum(1 for x in gas if abs(x - ball) == 1)
        if not config.hard_core:
            diagonal += config.exclusion * sum(1 for x in gas if x == ball)
        matrix[i, i] += diagonal

        for target in (ball - 1, ball + 1):
            if 0 <= target < config.sites and basis.contains(target, gas):
                matrix[basis.index_of(target, gas), i] += -config.ball_hop

        for k, site in enumerate(gas):
            for target in (site - 1, site + 1):
                add_gas_move(i, ball, gas, k, target, config.gas_hop)
            if config.exchange_hop != 0.0 and abs(site - ball) == 1:
                add_gas_move(i, ball, gas, k, 2 * ball - site, config.exchange_hop)

    if config.eta > 0.0:
        noise = SeededStream(config.seed).generator().uniform(-config.eta, config.eta, size=dimension)
        matrix[np.diag_indices(dimension)] += noise

    logger.info(f"Built ball-gas Hamiltonian: L={config.sites}, n_gas={config.n_gas}, dim={dimension}")
    return HermitianOperator(hermitize(matrix), units="energy")


def diagonalize(op: HermitianOperator) -> SpectralDecomposition:
    """Dense Hermitian eigensolver with residual and orthonormality checks."""
    eigenvalues, eigenvectors = scipy.linalg.eigh(op.entries)
    norm = op.norm()
    residual = float(np.max(np.linalg.norm(op.entries @ eigenvectors - eigenvectors * eigenvalues, axis=0)))
    tolerance = configs.EIGEN_RESIDUAL_TOL * max(1.0, norm)
    if residual > tolerance:
        raise InvariantViolationError("eigen-decomposition residual too large", quantity="residual",
                                      value=residual, tolerance=tolerance)
    return SpectralDecomposition(eigenvalues, eigenvectors, op.units, operator_norm=norm)


# ========================================================================
# Degeneracy checks
# ========================================================================

@dataclass(frozen=True)
class NondegeneracyReport:
    """Degenerate level pairs (m, n) and degenerate gap pairs ((m, n), (p, q))."""

    tol: float
    degenerate_levels: Tuple[Tuple[int, int], ...]
    degenerate_gaps: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...]

    @property
    def holds(self) -> bool:
        return not self.degenerate_levels and not self.degenerate_gaps


def _close_pairs(values: np.ndarray, tol: float) -> List[Tuple[int, int]]:
    """Index pairs (into *values*) whose entries differ by less than *tol*."""
    order = np.argsort(values, kind="stable")
    ordered = values[order]
    pairs = []
    for a in np.flatnonzero(np.diff(ordered) < tol):
        b = a + 1
        while b < ordered.size and ordered[b] - ordered[a] < tol:
            pairs.append((int(order[a]), int(order[b])))
            b += 1
    return sorted(set(pairs))


def check_nondegeneracy(spec: SpectralDecomposition, tol: float = 1e-9) -> NondegeneracyReport:
    """
    Report equal levels |E_m - E_n| < tol and equal gaps
    |(E_m - E_n) - (E_p - E_q)| < tol over distinct pairs m > n, p > q.
    """
    energies = spec.eigenvalues
    levels = [(min(a, b), max(a, b)) for a, b in _close_pairs(energies, tol)]
    lower, upper = np.triu_indices(energies.size, k=1)
    gaps = energies[upper] - energies[lower]
    gap_pairs = []
    for a, b in _close_pairs(gaps, tol):
        first = (int(upper[a]), int(lower[a]))
        second = (int(upper[b]), int(lower[b]))
        gap_pairs.append((first, second) if first < second else (second, first))
    report = NondegeneracyReport(tol, tuple(sorted(levels)), tuple(sorted(gap_pairs)))
    logger.debug(f"Degeneracy check: {len(report.degenerate_levels)} levels, {len(report.degenerate_gaps)} gaps")
    return report


@dataclass(frozen=True)
class BallGasModel:
    """A built model: the config actually used, its basis, Hamiltonian and spectrum."""

    config: BallGasConfig
    basis: BallGasBasis
    hamiltonian: HermitianOperator
    spectrum: SpectralDecomposition
    degeneracy: NondegeneracyReport
    attempts: int = 1


def build_model(config: BallGasConfig, tol: float = 1e-9) -> BallGasModel:
    basis = BallGasBasis.build(config)
    hamiltonian = build_ball_gas_hamiltonian(config, basis)
    spectrum = diagonalize(hamiltonian)
    return BallGasModel(config, basis, hamiltonian, spectrum, check_nondegeneracy(spectrum, tol))


def build_nondegenerate_model(config: BallGasConfig, tol: float = 1e-9, max_attempts: int = 10) -> BallGasModel:
    """
    Build the model, reseeding the eta-perturbation until no level or gap is degenerate.

    Raises:
        SpectrumError: still degenerate after *max_attempts* seeds (or eta = 0).
    """
    attempts = max_attempts if config.eta > 0.0 else 1
    current = config
    for attempt in range(1, attempts + 1):
        model = build_model(current, tol)
        if model.degeneracy.holds:
            return BallGasModel(model.config, model.basis, model.hamiltonian, model.spectrum,
                                model.degeneracy, attempt)
        logger.warning(f"Seed {current.seed}: {len(model.degeneracy.degenerate_levels)} degenerate levels, "
                       f"{len(model.degeneracy.degenerate_gaps)} degenerate gaps; reseeding")
        current = current.model_copy(update={"seed": (current.seed + 1) % 2**64})
    raise SpectrumError(f"spectrum still degenerate after {attempts} attempt(s) starting from seed {config.seed}")


# ========================================================================
# Evolution
# ========================================================================

def evolve(state0: StateVector, spec: SpectralDecomposition, t: float) -> StateVector:
    """Exact Schroedinger evolution to time *t*."""
    coordinates = spec.coordinates(state0)
    if t == 0:
        return state0
    evolved = spec.eigenvectors @ (np.exp(-1j * spec.eigenvalues * t) * coordinates)
    return StateVector(evolved, state0.dims)


def evolve_many(state0: StateVector, spec: SpectralDecomposition, times: Sequence[float]) -> List[StateVector]:
    coordinates = spec.coordinates(state0)
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), spec.eigenvalues))
    amplitudes = (phases * coordinates) @ spec.eigenvectors.T
    return [StateVector(row, state0.dims) for row in amplitudes]


def energy_expectation(state: StateVector, hamiltonian: HermitianOperator) -> float:
    return expectation(state, hamiltonian)


# ========================================================================
# Time series of macro-cell weights
# ========================================================================

@dataclass(frozen=True)
class QetTimeSeries:
    """Per-time macro-cell weights <psi(t)|P_nu|psi(t)> and their targets d_nu/D."""

    times: np.ndarray
    weights: np.ndarray
    targets: np.ndarray
    labels: Tuple[str, ...]
    leakage: float = 0.0

    def deviations(self) -> np.ndarray:
        """max_nu |weight_nu - d_nu/D| per time."""
        return np.max(np.abs(self.weights - self.targets), axis=1)


def time_grid(t_max: float, n_times: int) -> np.ndarray:
    """Uniform grid on [0, t_max] with *n_times* points."""
    if not t_max > 0:
        raise ConfigError(f"t_max must be > 0, got {t_max}")
    if n_times < 2:
        raise ConfigError(f"n_times must be >= 2, got {n_times}")
    return np.linspace(0.0, t_max, n_times)


def shell_coordinates(state0: StateVector, partition: MacroPartition, project: bool = False) -> Tuple[np.ndarray, float]:
    """
    Shell coordinates of *state0* and its leakage out of the shell.

    Raises:
        ShellLeakageError: leakage above SHELL_TOL and ``project`` is off.
    """
    shell = partition.shell
    leakage = shell.leakage(state0)
    coordinates = shell.coordinates(state0)
    if leakage > configs.SHELL_TOL:
        if not project:
            raise ShellLeakageError("initial state is not inside the energy shell",
                                    leakage=leakage, tolerance=configs.SHELL_TOL)
        logger.warning(f"Projecting initial state onto the shell; leakage {leakage:.3e} recorded")
        coordinates = coordinates / np.linalg.norm(coordinates)
    return coordinates, leakage


def cell_localized_state(partition: MacroPartition, observable: HermitianOperator, cell: int = 0) -> StateVector:
    """
    Lowest eigenvector of the shell-compressed *observable* that lies in macro cell *cell*.

    The returned state has weight 1 in that cell.
    """
    if not 0 <= cell < len(partition.cells):
        raise ConfigError(f"cell index {cell} outside [0, {len(partition.cells)})")
    _, vectors = scipy.linalg.eigh(partition.shell.compress(observable))
    projector = partition.cells[cell].projector
    inside = np.einsum("dk,de,ek->k", vectors.conj(), projector, vectors).real
    candidates = np.flatnonzero(inside > 0.5)
    if candidates.size == 0:
        raise SpectrumError(f"no eigenvector of the observable lies in cell {partition.cells[cell].label}")
    return partition.shell.lift(vectors[:, candidates[0]])


def _check_weights(weights: np.ndarray) -> None:
    lowest, highest = float(weights.min()), float(weights.max())
    if lowest < -configs.PROJECTOR_TOL or highest > 1.0 + configs.PROJECTOR_TOL:
        raise InvariantViolationError("cell weight outside [0, 1]", quantity="weight",
                                      value=lowest if lowest < 0 else highest, tolerance=configs.PROJECTOR_TOL)
    defect = float(np.max(np.abs(weights.sum(axis=1) - 1.0)))
    if defect > configs.WEIGHT_SUM_TOL:
        raise InvariantViolationError("cell weights do not sum to 1", quantity="weight_sum_defect",
                                      value=defect, tolerance=configs.WEIGHT_SUM_TOL)


def qet_time_series(state0: StateVector, spec: SpectralDecomposition, partition: MacroPartition,
                    times: Sequence[float], project: bool = False, threads: int = 1) -> QetTimeSeries:
    """
    Macro-cell weights of the evolved state at every sampled time.

    Args:
        state0: Initial state in the full model space.
        spec: Spectrum the partition's shell was cut from.
        partition: Macro partition of the energy shell.
        times: Increasing sample times.
        project: Project an out-of-shell state onto the shell instead of failing.
        threads: Worker threads over time chunks; the result does not depend on it.
    """
    if partition.shell.dim != spec.dim:
        raise DimensionMismatchError("partition shell and spectrum live in different spaces",
                                     expected=spec.dim, actual=partition.shell.dim)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be strictly increasing")

    coordinates, leakage = shell_coordinates(state0, partition, project)
    energies = partition.shell.eigenvalues
    chunks = [times[i:i + configs.TIME_CHUNK] for i in range(0, times.size, configs.TIME_CHUNK)]

    def _chunk(chunk: np.ndarray) -> np.ndarray:
        evolved = np.exp(-1j * np.outer(chunk, energies)) * coordinates
        return partition.weights(evolved)

    weights = np.concatenate(ordered_map(_chunk, chunks, threads), axis=0)
    _check_weights(weights)
    return QetTimeSeries(times, weights, partition.targets, tuple(partition.labels), leakage)


def ergodic_fraction(series: QetTimeSeries, epsilon: float) -> float:
    """Fraction of sampled times with max_nu |weight_nu - d_nu/D| <= epsilon."""
    if series.times.size == 0:
        raise ConfigError("ergodic fraction of an empty series")
    return float(np.mean(series.deviations() <= epsilon))


def relaxation_time(series: QetTimeSeries, epsilon: float) -> Optional[float]:
    """First sampled time at which every weight is within *epsilon* of its target, or None."""
    hits = np.flatnonzero(series.deviations() <= epsilon)
    return float(series.times[hits[0]]) if hits.size else None


def long_time_average(series: QetTimeSeries) -> np.ndarray:
    """Trapezoidal time average of each weight over the sampled window."""
    span = series.times[-1] - series.times[0]
    if span <= 0:
        return series.weights[0].copy()
    return scipy.integrate.trapezoid(series.weights, series.times, axis=0) / span


# ========================================================================
# Analytic long-time statistics
# ========================================================================

def _occupations(state0: StateVector, partition: MacroPartition) -> np.ndarray:
    coordinates, _ = shell_coordinates(state0, partition, project=True)
    return coordinates


def diagonal_ensemble_weights(state0: StateVector, partition: MacroPartition) -> np.ndarray:
    """sum_n |c_n|^2 <phi_n|P_nu|phi_n>: the infinite-time average for a nondegenerate spectrum."""
    probabilities = np.abs(_occupations(state0, partition)) ** 2
    diagonals = np.real(np.einsum("vnn->vn", partition.stacked_projectors()))
    return diagonals @ probabilities


def temporal_variance(state0: StateVector, partition: MacroPartition) -> np.ndarray:
    """sigma_nu^2 = sum_{m != n} |c_m|^2 |c_n|^2 |<phi_m|P_nu|phi_n>|^2."""
    probabilities = np.abs(_occupations(state0, partition)) ** 2
    squared = np.abs(partition.stacked_projectors()) ** 2
    total = np.einsum("m,vmn,n->v", probabilities, squared, probabilities)
    diagonal = np.einsum("n,vnn->v", probabilities ** 2, squared)
    return np.clip(total - diagonal, 0.0, None)


def _window_factors(energies: np.ndarray, t_max: float) -> np.ndarray:
    # (1/T) int_0^T exp(i w t) dt with w = E_m - E_n
    phases = np.subtract.outer(energies, energies) * t_max
    return np.exp(0.5j * phases) * np.sinc(phases / (2.0 * np.pi))


def time_averaged_weights(state0: StateVector, partition: MacroPartition, t_max: float) -> np.ndarray:
    """Exact average of each weight over [0, t_max] without time sampling."""
    if not t_max > 0:
        raise ConfigError(f"t_max must be > 0, got {t_max}")
    coordinates = _occupations(state0, partition)
    kernel = np.outer(coordinates.conj(), coordinates) * _window_factors(partition.shell.eigenvalues, t_max)
    return np.real(np.einsum("mn,vmn->v", kernel, partition.stacked_projectors()))


def time_average_error_bound(state0: StateVector, partition: MacroPartition, t_max: float) -> np.ndarray:
    """Upper bound sum_{m != n} 2 |c_m c_n P_mn| / (|E_m - E_n| t_max) on the finite-window error."""
    coordinates = _occupations(state0, partition)
    energies = partition.shell.eigenvalues
    gaps = np.abs(np.subtract.outer(energies, energies))
    np.fill_diagonal(gaps, np.inf)
    amplitudes = np.abs(np.outer(coordinates.conj(), coordinates))
    with np.errstate(divide="ignore"):
        factors = np.where(gaps > 0, 2.0 / (gaps * t_max), np.inf)
    np.fill_diagonal(factors, 0.0)
    return np.einsum("mn,vmn->v", amplitudes * factors, np.abs(partition.stacked_projectors()))


def windowed_average_error(state0: StateVector, partition: MacroPartition, t_max: float, points: int = 200) -> float:
    """
    RMS over windows T in [t_max, 2 t_max] of max_nu |exact average over [0, T] - diagonal ensemble|.

    The error at a single T oscillates with the phases E_m T; averaging over
    an octave of window lengths leaves the 1/T envelope.
    """
    if points < 1:
        raise ConfigError(f"points must be >= 1, got {points}")
    diagonal = diagonal_ensemble_weights(state0, partition)
    errors = [float(np.max(np.abs(time_averaged_weights(state0, partition, window) - diagonal)))
              for window in np.linspace(t_max, 2.0 * t_max, points)]
    return math.sqrt(float(np.mean(np.square(errors))))


def minimum_occupied_gap(state0: StateVector, partition: MacroPartition, occupancy_tol: float = 1e-12) -> float:
    """Smallest nonzero gap between shell levels with |c_n|^2 > occupancy_tol."""
    probabilities = np.abs(_occupations(state0, partition)) ** 2
    levels = np.sort(partition.shell.eigenvalues[probabilities > occupancy_tol])
    gaps = np.diff(levels)
    gaps = gaps[gaps > 0.0]
    if gaps.size == 0:
        raise SpectrumError("fewer than two distinct occupied levels; no dephasing time scale")
    return float(gaps.min())


def long_time_horizon(gap: float, factor: float = 50.0) -> float:
    """T = factor / gap."""
    if not gap > 0:
        raise SpectrumError(f"gap must be > 0, got {gap}")
    return factor / gap


@dataclass(frozen=True)
class QetConditionReport:
    """Per cell: max_n |<phi_n|P|phi_n> - d/D| and max_{m != n} |<phi_m|P|phi_n>|."""

    labels: Tuple[str, ...]
    diagonal_deviation: np.ndarray
    off_diagonal_max: np.ndarray


def check_qet_condition(spec: SpectralDecomposition, partition: MacroPartition) -> QetConditionReport:
    if partition.shell.dim != spec.dim:
        raise DimensionMismatchError("partition shell and spectrum live in different spaces",
                                     expected=spec.dim, actual=partition.shell.dim)
    projectors = partition.stacked_projectors()
    diagonals = np.real(np.einsum("vnn->vn", projectors))
    diagonal_deviation = np.max(np.abs(diagonals - partition.targets[:, None]), axis=1)
    magnitudes = np.abs(projectors).copy()
    for matrix in magnitudes:
        np.fill_diagonal(matrix, 0.0)
    off_diagonal_max = magnitudes.reshape(len(partition.cells), -1).max(axis=1)
    return QetConditionReport(tuple(partition.labels), diagonal_deviation, off_diagonal_max)
