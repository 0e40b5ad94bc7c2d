"""
Coarse-grained (macroscopic) observables, energy shells and macro partitions.

Bands are closed on the left for the first band and half-open (lower, upper]
otherwise, so an eigenvalue sitting on an interior edge belongs to the lower
band. Eigenvalues within EDGE_TOL above an edge are treated as ties as well.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

import configs
from exceptions import (
    ConfigError,
    DimensionMismatchError,
    EmptyShellError,
    EmptySpectrumError,
    InvariantViolationError,
    NonCommutingObservableError,
    SpectrumError,
)
from models.hilbert import HermitianOperator, SpectralDecomposition, StateVector
from utils.validation import commutator_norm, hermitize

logger = logging.getLogger(__name__)


# ========================================================================
# Band specifications
# ========================================================================

@dataclass(frozen=True)
class BandSpec:
    """Either a uniform band width over the spectrum's range, or explicit edges."""

    width: Optional[float] = None
    edges: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if (self.width is None) == (self.edges is None):
            raise ConfigError("BandSpec needs exactly one of width or edges")
        if self.width is not None and not self.width > 0:
            raise ConfigError(f"band width must be > 0, got {self.width}")
        if self.edges is not None:
            edges = tuple(float(e) for e in self.edges)
            if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
                raise ConfigError(f"band edges must be strictly increasing with at least two entries, got {edges}")
            object.__setattr__(self, "edges", edges)

    @classmethod
    def uniform(cls, width: float) -> "BandSpec":
        return cls(width=width)

    @classmethod
    def explicit(cls, edges: Sequence[float]) -> "BandSpec":
        return cls(edges=tuple(edges))

    @classmethod
    def unit_bins(cls, start: int, stop: int, per_band: int = 1) -> "BandSpec":
        """Edges at half-integers grouping *per_band* consecutive integers, e.g. lattice sites."""
        edges = [start - 0.5 + k * per_band for k in range(math.ceil((stop - start) / per_band) + 1)]
        return cls(edges=tuple(edges))

    def resolve_edges(self, eigenvalues: np.ndarray) -> np.ndarray:
        if self.edges is not None:
            return np.asarray(self.edges)
        if eigenvalues.size == 0:
            raise EmptySpectrumError("cannot band an empty spectrum")
        lo, hi = float(eigenvalues.min()), float(eigenvalues.max())
        if hi - lo <= 0.0:
            raise EmptySpectrumError(f"spectrum range is empty (all eigenvalues equal {lo!r}); use explicit edges")
        count = max(1, math.ceil((hi - lo) / self.width))
        edges = lo + self.width * np.arange(count + 1)
        edges[-1] = max(edges[-1], hi)
        return edges

    def assign(self, eigenvalues: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[str]]:
        """
        Band index of every eigenvalue.

        Returns:
            (band indices, edges, tie warnings)
        """
        values = np.asarray(eigenvalues, dtype=float)
        edges = self.resolve_edges(values)
        tol = configs.EDGE_TOL
        outside = values[(values < edges[0] - tol) | (values > edges[-1] + tol)]
        if outside.size:
            raise SpectrumError(f"bands [{edges[0]!r}, {edges[-1]!r}] do not cover eigenvalues {outside.tolist()}")
        indices = np.clip(np.searchsorted(edges, values - tol, side="left") - 1, 0, len(edges) - 2)
        warnings = []
        for edge in edges[1:-1]:
            for value in values[np.abs(values - edge) <= tol]:
                warnings.append(f"eigenvalue {value!r} within {tol:g} of band edge {edge!r}; assigned to lower band")
        return indices, edges, warnings


# ========================================================================
# Coarse graining
# ========================================================================

@dataclass(frozen=True)
class Band:
    """A band of nearby eigenvalues and its coarse (mean) value."""

    index: int
    lower: float
    upper: float
    mean: float
    members: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MacroOperator:
    """Original operator, its bands and the banded (degenerate) coarse version."""

    original: HermitianOperator
    bands: Tuple[Band, ...]
    coarse: HermitianOperator
    eigenvectors: np.ndarray = field(repr=False)
    warnings: Tuple[str, ...] = ()


def _bands_from_assignment(eigenvalues: np.ndarray, indices: np.ndarray, edges: np.ndarray) -> List[Band]:
    bands = []
    for b in range(len(edges) - 1):
        members = np.flatnonzero(indices == b)
        if members.size == 0:
            continue
        bands.append(Band(b, float(edges[b]), float(edges[b + 1]),
                          float(np.mean(eigenvalues[members])), tuple(int(m) for m in members)))
    return bands


def coarse_grain(op: HermitianOperator, spec: BandSpec) -> MacroOperator:
    """
    Replace every eigenvalue of *op* by the arithmetic mean of its band.

    The coarse operator shares the eigenvectors of *op* and has one distinct
    eigenvalue per non-empty band, with multiplicity equal to the band size.
    """
    eigenvalues, eigenvectors = scipy.linalg.eigh(op.entries)
    indices, edges, warnings = spec.assign(eigenvalues)
    for message in warnings:
        logger.warning(message)
    bands = _bands_from_assignment(eigenvalues, indices, edges)
    coarse_values = np.empty_like(eigenvalues)
    for band in bands:
        coarse_values[list(band.members)] = band.mean
    coarse = hermitize((eigenvectors * coarse_values) @ eigenvectors.conj().T)
    return MacroOperator(op, tuple(bands), HermitianOperator(coarse, op.units), eigenvectors, tuple(warnings))


# ========================================================================
# Energy shells
# ========================================================================

@dataclass(frozen=True)
class EnergyShell:
    """Span of the Hamiltonian eigenvectors with eigenvalues in [e_lo, e_hi)."""

    basis: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    indices: Tuple[int, ...]
    e_lo: float
    e_hi: float

    @property
    def D(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return self.basis.shape[0]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def compress(self, op: Union[HermitianOperator, np.ndarray]) -> np.ndarray:
        """B^dagger A B: the observable seen inside the shell, in shell coordinates."""
        matrix = op.entries if isinstance(op, HermitianOperator) else np.asarray(op)
        if matrix.shape != (self.dim, self.dim):
            raise DimensionMismatchError("observable does not act on the shell's space",
                                         expected=self.dim, actual=matrix.shape[0])
        return hermitize(self.basis.conj().T @ matrix @ self.basis)

    def coordinates(self, state: StateVector) -> np.ndarray:
        if state.dim != self.dim:
            raise DimensionMismatchError("state does not live in the shell's space", expected=self.dim, actual=state.dim)
        return self.basis.conj().T @ state.amplitudes

    def leakage(self, state: StateVector) -> float:
        """||psi - P_shell psi||."""
        inside = self.basis @ self.coordinates(state)
        return float(np.linalg.norm(state.amplitudes - inside))

    def lift(self, coordinates: np.ndarray) -> StateVector:
        """Full-space state from normalised shell coordinates."""
        return StateVector(self.basis @ np.asarray(coordinates, dtype=np.complex128))


def energy_shell(spec: SpectralDecomposition, e_lo: float, e_hi: float) -> EnergyShell:
    """
    Eigenvectors of H with eigenvalues in [e_lo, e_hi).

    Raises:
        EmptyShellError: no eigenvalue in the band; the nearest ones are reported.
    """
    if not e_hi > e_lo:
        raise ConfigError(f"shell needs e_lo < e_hi, got [{e_lo}, {e_hi})")
    energies = spec.eigenvalues
    mask = (energies >= e_lo) & (energies < e_hi)
    if not mask.any():
        below = energies[energies < e_lo]
        above = energies[energies >= e_hi]
        raise EmptyShellError(f"no eigenvalue in [{e_lo!r}, {e_hi!r})",
                              below=float(below.max()) if below.size else None,
                              above=float(above.min()) if above.size else None)
    indices = np.flatnonzero(mask)
    logger.info(f"Energy shell [{e_lo:.6g}, {e_hi:.6g}) has D={indices.size}")
    return EnergyShell(spec.eigenvectors[:, indices], energies[indices],
                       tuple(int(i) for i in indices), float(e_lo), float(e_hi))


def centered_shell(spec: SpectralDecomposition, dimension: int) -> EnergyShell:
    """Mid-spectrum shell holding *dimension* levels, edges at midpoints between neighbours."""
    n = spec.dim
    if not 1 <= dimension <= n:
        raise ConfigError(f"shell dimension must be in [1, {n}], got {dimension}")
    energies = spec.eigenvalues
    start = (n - dimension) // 2
    stop = start + dimension
    e_lo = energies[0] if start == 0 else 0.5 * (energies[start - 1] + energies[start])
    e_hi = np.nextafter(energies[-1], np.inf) if stop == n else 0.5 * (energies[stop - 1] + energies[stop])
    return energy_shell(spec, float(e_lo), float(e_hi))


# ========================================================================
# Macro partitions
# ========================================================================

@dataclass(frozen=True)
class MacroCell:
    """One macro subspace: label, macroscopic value, projector in shell coordinates, dimension."""

    label: str
    value: Union[float, Tuple[float, ...]]
    projector: np.ndarray = field(repr=False)
    dimension: int


@dataclass(frozen=True)
class MacroPartition:
    """Orthogonal decomposition of an energy shell into macro cells, D = sum d_nu."""

    shell: EnergyShell
    cells: Tuple[MacroCell, ...]
    mode: str
    warnings: Tuple[str, ...] = ()

    @property
    def D(self) -> int:
        return self.shell.D

    @property
    def labels(self) -> List[str]:
        return [cell.label for cell in self.cells]

    @property
    def dimensions(self) -> np.ndarray:
        return np.array([cell.dimension for cell in self.cells])

    @property
    def targets(self) -> np.ndarray:
        """d_nu / D."""
        return self.dimensions / self.D

    def stacked_projectors(self) -> np.ndarray:
        return np.stack([cell.projector for cell in self.cells])

    def weights(self, coordinates: np.ndarray) -> np.ndarray:
        """<psi|P_nu|psi> for shell coordinates of shape (D,) or (T, D)."""
        projectors = self.stacked_projectors()
        coords = np.asarray(coordinates)
        if coords.ndim == 1:
            return np.einsum("d,vde,e->v", coords.conj(), projectors, coords).real
        return np.einsum("td,vde,te->tv", coords.conj(), projectors, coords).real

    def validate(self, tol: float = configs.PROJECTOR_TOL) -> None:
        """Check idempotency, mutual orthogonality, completeness and integer traces."""
        projectors = self.stacked_projectors()
        identity = np.eye(self.D)
        if self.dimensions.sum() != self.D:
            raise InvariantViolationError("cell dimensions do not sum to D", quantity="sum_d",
                                          value=float(self.dimensions.sum()), tolerance=0.0)
        completeness = float(np.max(np.abs(projectors.sum(axis=0) - identity)))
        if completeness > tol:
            raise InvariantViolationError("projectors do not sum to the shell identity",
                                          quantity="completeness_defect", value=completeness, tolerance=tol)
        for nu, cell in enumerate(self.cells):
            p = cell.projector
            for mu in range(nu, len(self.cells)):
                expected = p if mu == nu else np.zeros_like(p)
                defect = float(np.max(np.abs(p @ projectors[mu] - expected)))
                if defect > tol:
                    raise InvariantViolationError(f"projector algebra fails for cells {cell.label}, {self.cells[mu].label}",
                                                  quantity="projector_defect", value=defect, tolerance=tol)
            trace = float(np.trace(p).real)
            if abs(trace - cell.dimension) > tol:
                raise InvariantViolationError(f"tr(P) differs from d for cell {cell.label}",
                                              quantity="trace", value=trace, tolerance=tol)


def _shell_matrix(shell: EnergyShell, observable: Union[HermitianOperator, np.ndarray]) -> np.ndarray:
    matrix = observable.entries if isinstance(observable, HermitianOperator) else np.asarray(observable)
    if matrix.shape == (shell.D, shell.D) and shell.D != shell.dim:
        return hermitize(matrix)
    return shell.compress(matrix)


def build_macro_partition(shell: EnergyShell, observable: Union[HermitianOperator, np.ndarray],
                          spec: BandSpec, mode: str = "compressed") -> MacroPartition:
    """
    Partition the shell into eigenspace bands of the shell-compressed observable.

    Args:
        shell: Energy shell.
        observable: Full-space observable (compressed as B^dagger A B), or a
            D x D matrix already in shell coordinates.
        spec: Bands on the compressed observable's eigenvalues.
        mode: ``"compressed"`` projects then diagonalises; ``"commuting"``
            additionally requires ||[A, P_shell]||_F <= COMMUTATOR_TOL.
    """
    if mode not in ("compressed", "commuting"):
        raise ConfigError(f"unknown partition mode {mode!r}")
    if mode == "commuting":
        matrix = observable.entries if isinstance(observable, HermitianOperator) else np.asarray(observable)
        norm = commutator_norm(matrix, shell.projector())
        if norm > configs.COMMUTATOR_TOL:
            raise NonCommutingObservableError("observable does not commute with the shell projector",
                                              commutator_norm=norm)
    compressed = _shell_matrix(shell, observable)
    eigenvalues, eigenvectors = scipy.linalg.eigh(compressed)
    indices, edges, warnings = spec.assign(eigenvalues)
    for message in warnings:
        logger.warning(message)
    cells = []
    for band in _bands_from_assignment(eigenvalues, indices, edges):
        vectors = eigenvectors[:, list(band.members)]
        cells.append(MacroCell(str(band.index), band.mean, hermitize(vectors @ vectors.conj().T), band.size))
    partition = MacroPartition(shell, tuple(cells), mode, tuple(warnings))
    logger.info(f"Macro partition ({mode}): D={shell.D}, d_nu={partition.dimensions.tolist()}")
    return partition


def joint_partition(first: MacroPartition, second: MacroPartition,
                    tol: float = configs.COMMUTATOR_TOL) -> MacroPartition:
    """Refine two commuting partitions of the same shell into intersection cells."""
    if first.D != second.D or first.shell.indices != second.shell.indices:
        raise DimensionMismatchError("partitions live on different shells", expected=first.D, actual=second.D)
    cells = []
    for a in first.cells:
        for b in second.cells:
            norm = commutator_norm(a.projector, b.projector)
            if norm > tol:
                raise NonCommutingObservableError(f"cells {a.label} and {b.label} do not commute",
                                                  commutator_norm=norm)
            product = hermitize(a.projector @ b.projector)
            rank = int(round(float(np.trace(product).real)))
            if rank == 0:
                continue
            cells.append(MacroCell(f"{a.label}:{b.label}", (a.value, b.value), product, rank))
    return MacroPartition(first.shell, tuple(cells), "joint", first.warnings + second.warnings)
