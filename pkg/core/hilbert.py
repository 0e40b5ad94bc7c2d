"""
Hilbert-space operations: partial trace, purity, distances, entropy.
All functions are pure; inputs are immutable value types from models.hilbert.
"""

from typing import Optional

import numpy as np

from exceptions import ConfigError, DimensionMismatchError, InvariantViolationError
from models.hilbert import DensityMatrix, HermitianOperator, HilbertDims, StateVector
from utils.validation import hermitize


def _resolve_dims(state: StateVector, dims: Optional[HilbertDims]) -> HilbertDims:
    dims = dims or state.dims
    if dims is None:
        raise InvariantViolationError("state has no bipartite structure; pass HilbertDims")
    if dims.total != state.dim:
        raise DimensionMismatchError("state length does not match n1*n2", expected=dims.total, actual=state.dim)
    return dims


def partial_trace(state: StateVector, dims: Optional[HilbertDims] = None, keep: int = 1) -> DensityMatrix:
    """
    Reduced density matrix of a bipartite pure state.

    Args:
        state: Pure state on H_1 (x) H_2.
        dims: Subsystem dimensions; defaults to ``state.dims``.
        keep: 1 returns rho_1 = tr_2 rho, 2 returns rho_2 = tr_1 rho.

    Returns:
        rho_1 with (rho_1)_{j1,k1} = sum_{j2} c_{j1,j2} c*_{k1,j2} (or the analogue for rho_2).
    """
    dims = _resolve_dims(state, dims)
    coefficients = state.amplitudes.reshape(dims.n1, dims.n2)
    if keep == 1:
        reduced = coefficients @ coefficients.conj().T
    elif keep == 2:
        reduced = coefficients.T @ coefficients.conj()
    else:
        raise ConfigError(f"keep must be 1 or 2, got {keep!r}")
    return DensityMatrix(hermitize(reduced))


def density_matrix(state: StateVector) -> DensityMatrix:
    """rho = psi psi^dagger."""
    return DensityMatrix(np.outer(state.amplitudes, state.amplitudes.conj()))


def tensor_product(first: StateVector, second: StateVector) -> StateVector:
    """psi_1 (x) psi_2 with dims (len psi_1, len psi_2)."""
    return StateVector(np.kron(first.amplitudes, second.amplitudes), HilbertDims(first.dim, second.dim))


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2): 1 for pure states, 1/dim for the maximally mixed state."""
    return float(np.vdot(rho.entries, rho.entries).real)


def distance_to_maximally_mixed(rho: DensityMatrix) -> float:
    """Frobenius distance ||rho - I/dim||_F."""
    return float(np.linalg.norm(rho.entries - np.eye(rho.dim) / rho.dim))


def overlap(first: StateVector, second: StateVector) -> complex:
    """<first|second>."""
    if first.dim != second.dim:
        raise DimensionMismatchError("states live in different spaces", expected=first.dim, actual=second.dim)
    return complex(np.vdot(first.amplitudes, second.amplitudes))


def fidelity(first: StateVector, second: StateVector) -> float:
    """|<first|second>|^2 for pure states."""
    return abs(overlap(first, second)) ** 2


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(1/2) sum |eig(rho - sigma)|."""
    if rho.dim != sigma.dim:
        raise DimensionMismatchError("density matrices differ in dimension", expected=rho.dim, actual=sigma.dim)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho.entries - sigma.entries))))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-sum lambda ln lambda in nats, with 0 ln 0 = 0."""
    eigenvalues = rho.eigenvalues()
    positive = eigenvalues[eigenvalues > 0.0]
    return float(-np.sum(positive * np.log(positive)))


def expectation(state: StateVector, op: HermitianOperator) -> float:
    """<psi|A|psi> for Hermitian A."""
    if op.dim != state.dim:
        raise DimensionMismatchError("operator does not act on this state", expected=op.dim, actual=state.dim)
    return float(np.vdot(state.amplitudes, op.entries @ state.amplitudes).real)
