"""
Numerical invariant checks, shared across models and core.
"""

import numpy as np

import configs
from exceptions import InvariantViolationError


def hermitian_defect(matrix: np.ndarray) -> float:
    """Largest entry of |A - A^dagger|, relative to max(1, ||A||_F)."""
    scale = max(1.0, float(np.linalg.norm(matrix)))
    return float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0)) / scale


def require_square(matrix: np.ndarray, name: str) -> None:
    """Raise unless *matrix* is a non-empty square 2-D array."""
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise InvariantViolationError(f"{name} must be a non-empty square matrix, got shape {matrix.shape}")


def require_hermitian(matrix: np.ndarray, name: str, tol: float = configs.HERMITIAN_TOL) -> None:
    defect = hermitian_defect(matrix)
    if defect > tol:
        raise InvariantViolationError(f"{name} is not Hermitian", quantity="hermitian_defect",
                                      value=defect, tolerance=tol)


def require_unit_norm(vector: np.ndarray, name: str, tol: float = configs.NORM_TOL) -> None:
    """Raise unless sum |c|^2 equals 1 within *tol*."""
    norm_sq = float(np.vdot(vector, vector).real)
    if abs(norm_sq - 1.0) > tol:
        raise InvariantViolationError(f"{name} is not normalised", quantity="norm_squared",
                                      value=norm_sq, tolerance=tol)


def orthonormality_defect(columns: np.ndarray) -> float:
    """Largest entry of |V^dagger V - I| for a matrix of column vectors."""
    gram = columns.conj().T @ columns
    return float(np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0))


def require_orthonormal(columns: np.ndarray, name: str, tol: float = configs.ORTHONORMAL_TOL) -> None:
    defect = orthonormality_defect(columns)
    if defect > tol:
        raise InvariantViolationError(f"{name} columns are not orthonormal", quantity="orthonormality_defect",
                                      value=defect, tolerance=tol)


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of [A, B]."""
    return float(np.linalg.norm(a @ b - b @ a))


def hermitize(matrix: np.ndarray) -> np.ndarray:
    """Return (A + A^dagger) / 2, removing round-off anti-Hermitian parts."""
    return 0.5 * (matrix + matrix.conj().T)
