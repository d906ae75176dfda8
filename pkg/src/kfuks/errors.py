"""Exception types shared across the package."""


class KfuksError(Exception):
    """Base class for all package errors."""


class ArgumentError(KfuksError, ValueError):
    """Invalid argument (empty grid, mismatched weights, bad range, ...)."""


class DomainError(KfuksError, ValueError):
    """A point is outside the domain, or a parameter violates a domain precondition."""


class UnsupportedError(KfuksError, ValueError):
    """Requested operation is not available for this domain/engine/model."""


class ValidationError(KfuksError, RuntimeError):
    """A constructed object failed its numerical self-validation."""


class TruncationError(KfuksError, RuntimeError):
    """Series tail bound exceeds the requested tolerance."""


class IllConditionedError(KfuksError, RuntimeError):
    """Gram matrix is numerically rank-deficient or indefinite.

    Usually fixed by increasing quadrature nodes or shrinking the basis.
    """


class DegenerateMetricError(KfuksError, RuntimeError):
    """A matrix that must be positive definite failed the eigenvalue check."""


class StepTooLargeError(KfuksError, RuntimeError):
    """A finite-difference stencil leaves the domain."""


class InfeasibleError(KfuksError, RuntimeError):
    """Extremal/minimum problem has no feasible function in the current basis."""
