"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An object invariant (hermiticity, trace, positivity, ...) is violated."""


class DegenerateInputError(ValueError):
    """Symmetric projection of the input has (near-)zero norm."""


class CapacityError(ValueError):
    """Requested computation exceeds a hard size guard."""


class DomainError(ValueError):
    """Arithmetic precondition violated (empty tally, zero denominator, ...)."""


class UnsupportedConfigurationError(ValueError):
    """Operation defined only for a specific detector configuration."""


class InfeasibleError(RuntimeError):
    """Optimization feasible set is empty."""


class ClosedFormConditionError(ValueError):
    """Closed-form six-state solution is outside its validity condition.

    Callers should fall back to the numeric minimizer.
    """


class RecoveryError(RuntimeError):
    """Linear-system parameter recovery failed (rank deficiency or residual)."""


class InconsistentStatisticsError(ValueError):
    """Observed statistics exceed what quantum mechanics allows."""
