"""Exception hierarchy shared across the package."""


class IdepcagError(Exception):
    """Base class for all package errors."""


class ExpressionSyntaxError(IdepcagError):
    """Malformed expression source; carries the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(IdepcagError):
    """Evaluation left the real domain (ln of nonpositive, division by zero,
    non-finite result)."""


class GridError(IdepcagError):
    """Invalid partition specification or a time outside the window."""


class DimensionError(IdepcagError):
    """Inconsistent dimensions between system components."""


class HypothesisError(IdepcagError):
    """A solvability hypothesis (contraction or kernel-invertibility gate)
    failed and no override was requested."""


class NumericalError(IdepcagError):
    """Numerical failure: blow-up, singular matrix, quadrature domain error,
    or non-convergence."""


class SingularMatrixError(NumericalError):
    """A matrix that the theory requires invertible is numerically singular."""


class ContractionError(HypothesisError):
    """The per-interval contraction condition required by the fixed-point
    oracle does not hold."""


class ConfigError(IdepcagError):
    """Config file failed schema validation or cross-field checks."""
