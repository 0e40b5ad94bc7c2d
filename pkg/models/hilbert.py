"""
Domain model for finite-dimensional Hilbert spaces.

Index convention: a bipartite amplitude vector is ordered lexicographically by
(j1, j2), j1 major, so it reshapes to the n1 x n2 coefficient matrix C with
rho_1 = C C^dagger.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import configs
from exceptions import DimensionMismatchError, InvariantViolationError
from utils.validation import (
    require_hermitian,
    require_orthonormal,
    require_square,
    require_unit_norm,
)


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class HilbertDims:
    """Dimensions (n1, n2) of a bipartite space H_1 (x) H_2."""

    n1: int
    n2: int

    def __post_init__(self):
        if int(self.n1) < 1 or int(self.n2) < 1:
            raise InvariantViolationError(f"subsystem dimensions must be >= 1, got ({self.n1}, {self.n2})")

    @property
    def total(self) -> int:
        return self.n1 * self.n2

    def transposed(self) -> "HilbertDims":
        return HilbertDims(self.n2, self.n1)


@dataclass(frozen=True)
class StateVector:
    """Unit-norm complex amplitudes, optionally carrying a bipartite structure."""

    amplitudes: np.ndarray
    dims: Optional[HilbertDims] = None

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes, np.complex128)
        if amplitudes.ndim != 1 or amplitudes.size == 0:
            raise InvariantViolationError(f"amplitudes must be a non-empty vector, got shape {amplitudes.shape}")
        object.__setattr__(self, "amplitudes", amplitudes)
        if self.dims is not None and self.dims.total != amplitudes.size:
            raise DimensionMismatchError("state length does not match n1*n2",
                                         expected=self.dims.total, actual=amplitudes.size)
        require_unit_norm(amplitudes, "state")

    @classmethod
    def normalized(cls, amplitudes, dims: Optional[HilbertDims] = None) -> "StateVector":
        """Build a state from arbitrary non-zero amplitudes by normalising them."""
        vector = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise InvariantViolationError("cannot normalise the zero vector")
        return cls(vector / norm, dims)

    @classmethod
    def from_coefficients(cls, coefficients) -> "StateVector":
        """Build a bipartite state from its n1 x n2 coefficient matrix."""
        matrix = np.asarray(coefficients, dtype=np.complex128)
        if matrix.ndim != 2:
            raise InvariantViolationError(f"coefficient matrix must be 2-D, got shape {matrix.shape}")
        return cls(matrix.reshape(-1), HilbertDims(*matrix.shape))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def with_dims(self, dims: HilbertDims) -> "StateVector":
        return StateVector(self.amplitudes, dims)

    def coefficient_matrix(self, dims: Optional[HilbertDims] = None) -> np.ndarray:
        """The n1 x n2 matrix c_{j1,j2}."""
        dims = dims or self.dims
        if dims is None:
            raise InvariantViolationError("state has no bipartite structure; pass HilbertDims")
        if dims.total != self.dim:
            raise DimensionMismatchError("state length does not match n1*n2",
                                         expected=dims.total, actual=self.dim)
        return self.amplitudes.reshape(dims.n1, dims.n2)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries, np.complex128)
        require_square(entries, "density matrix")
        require_hermitian(entries, "density matrix")
        trace = complex(np.trace(entries))
        if abs(trace - 1.0) > configs.TRACE_TOL:
            raise InvariantViolationError("density matrix trace is not 1", quantity="trace",
                                          value=trace.real, tolerance=configs.TRACE_TOL)
        smallest = float(np.linalg.eigvalsh(entries)[0])
        if smallest < -configs.PSD_TOL:
            raise InvariantViolationError("density matrix is not positive semidefinite",
                                          quantity="min_eigenvalue", value=smallest,
                                          tolerance=configs.PSD_TOL)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Ascending spectrum."""
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix with its physical unit carried as metadata."""

    entries: np.ndarray
    units: str = "dimensionless"

    def __post_init__(self):
        entries = _frozen(self.entries, np.complex128)
        require_square(entries, "operator")
        require_hermitian(entries, "operator")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        """Spectral norm ||A||_2."""
        return float(np.linalg.norm(self.entries, 2))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian operator."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    units: str = "dimensionless"
    operator_norm: float = field(default=0.0, compare=False)

    def __post_init__(self):
        eigenvalues = _frozen(self.eigenvalues, np.float64)
        eigenvectors = _frozen(self.eigenvectors, np.complex128)
        if eigenvalues.ndim != 1 or eigenvectors.shape != (eigenvalues.size, eigenvalues.size):
            raise DimensionMismatchError("eigenvector matrix does not match eigenvalue count",
                                         expected=eigenvalues.size, actual=eigenvectors.shape[-1])
        if np.any(np.diff(eigenvalues) < 0):
            raise InvariantViolationError("eigenvalues must be sorted ascending")
        require_orthonormal(eigenvectors, "eigenvector")
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "eigenvectors", eigenvectors)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def coordinates(self, state: StateVector) -> np.ndarray:
        """Eigenbasis amplitudes <phi_n|psi>."""
        if state.dim != self.dim:
            raise DimensionMismatchError("state does not match operator dimension",
                                         expected=self.dim, actual=state.dim)
        return self.eigenvectors.conj().T @ state.amplitudes
