"""
Custom exceptions for the ergodic-lab application.

Hierarchy
─────────
ErgodicLabError
├── ConfigError
├── DimensionError
│   ├── DimensionMismatchError
│   └── DimensionOverflowError
├── InvariantViolationError
├── IndexRangeError
├── BoundDomainError
├── SpectrumError
│   ├── EmptySpectrumError
│   └── EmptyShellError
├── ShellLeakageError
└── NonCommutingObservableError
"""


class ErgodicLabError(Exception):
    """Base exception for all ergodic-lab errors."""


# ── Configuration ────────────────────────────────────────────────────────

class ConfigError(ErgodicLabError):
    """Raised when a run configuration fails to parse or validate."""


# ── Dimensions ───────────────────────────────────────────────────────────

class DimensionError(ErgodicLabError):
    """Base for Hilbert-space dimension problems."""


class DimensionMismatchError(DimensionError):
    """Two objects that must share a dimension do not."""

    def __init__(self, message: str, *, expected: int | None = None,
                 actual: int | None = None):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{message} (expected {expected}, got {actual})")


class DimensionOverflowError(DimensionError):
    """A construction would exceed the configured dimension cap."""

    def __init__(self, message: str, *, dimension: int, cap: int):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"{message}: dimension {dimension} exceeds cap {cap}")


# ── Numerical invariants ─────────────────────────────────────────────────

class InvariantViolationError(ErgodicLabError):
    """A value violates an invariant of its type (norm, trace, Hermiticity, ...)."""

    def __init__(self, message: str, *, quantity: str | None = None,
                 value: float | None = None, tolerance: float | None = None):
        self.quantity = quantity
        self.value = value
        self.tolerance = tolerance
        detail = ""
        if quantity is not None:
            detail = f" [{quantity}={value!r}, tolerance={tolerance!r}]"
        super().__init__(f"{message}{detail}")


class IndexRangeError(ErgodicLabError, IndexError):
    """A matrix index lies outside the subsystem dimension."""


class BoundDomainError(ErgodicLabError):
    """The expectation-form concentration bound does not apply (epsilon <= delta)."""

    def __init__(self, message: str, *, epsilon: float, delta: float):
        self.epsilon = epsilon
        self.delta = delta
        super().__init__(f"{message}: epsilon={epsilon!r} <= delta={delta!r}")


# ── Spectra and shells ───────────────────────────────────────────────────

class SpectrumError(ErgodicLabError):
    """Base for errors about eigenvalue sets and bands."""


class EmptySpectrumError(SpectrumError):
    """The spectrum has no usable range for the requested banding."""


class EmptyShellError(SpectrumError):
    """No eigenvalue lies inside the requested energy shell."""

    def __init__(self, message: str, *, below: float | None = None,
                 above: float | None = None):
        self.below = below
        self.above = above
        super().__init__(f"{message} (nearest eigenvalues: below={below!r}, above={above!r})")


class ShellLeakageError(ErgodicLabError):
    """A state has weight outside the energy shell beyond tolerance."""

    def __init__(self, message: str, *, leakage: float, tolerance: float):
        self.leakage = leakage
        self.tolerance = tolerance
        super().__init__(f"{message}: leakage {leakage:.3e} > tolerance {tolerance:.1e}")


class NonCommutingObservableError(ErgodicLabError):
    """An observable expected to commute with the shell projector does not."""

    def __init__(self, message: str, *, commutator_norm: float):
        self.commutator_norm = commutator_norm
        super().__init__(f"{message}: ||[A, P]||_F = {commutator_norm:.3e}")
