"""Exception types raised across the package."""


class CanonError(Exception):
    """Base class for all package errors."""


class DimensionError(CanonError, ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(CanonError, ValueError):
    """A matrix declared Hermitian fails the Hermiticity gate."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotDensityMatrixError(CanonError, ValueError):
    """A matrix declared to be a state is not PSD with unit trace."""


class NotHPTAError(CanonError):
    """A superoperator is not hermiticity-preserving and trace-annihilating."""

    def __init__(self, message, hermiticity_residual=None, trace_residual=None):
        super().__init__(message)
        self.hermiticity_residual = hermiticity_residual
        self.trace_residual = trace_residual


class SingularChannelError(CanonError):
    """The reduced channel is numerically non-invertible at the requested time."""

    def __init__(self, message, condition_number=None, t=None):
        super().__init__(message)
        self.condition_number = condition_number
        self.t = t
