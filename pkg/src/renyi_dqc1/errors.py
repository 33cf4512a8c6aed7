"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`RenyiError`.
Input-validation problems additionally derive from :class:`ValueError` so that
generic callers can catch them the usual way.
"""


class RenyiError(Exception):
    """Base class for all package errors."""


class ValidationError(RenyiError, ValueError):
    """An argument or input object violates a documented precondition."""


class NonHermitian(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class NormTooLarge(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class AlphaOutOfRange(ValidationError):
    pass


class DeltaOutOfRange(ValidationError):
    pass


class DeltaTooSmall(ValidationError):
    """The requested cutoff (or accuracy) needs a polynomial above the degree limit."""


class SpectrumViolation(ValidationError):
    """The state has an eigenvalue below the trusted cutoff delta."""


class ConfidenceTooLow(ValidationError):
    pass


class ErrorBudgetExceeded(RenyiError):
    pass


class AmplificationOverflow(RenyiError):
    pass


class InfeasibleShotBudget(RenyiError):
    """The number of clean-qubit measurements required exceeds the configured cap."""

    def __init__(self, message, required=None, cap=None):
        super().__init__(message)
        self.required = required
        self.cap = cap


class SubroutineFailure(RenyiError):
    pass


class PureStateSuspected(RenyiError):
    pass
