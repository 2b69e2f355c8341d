"""Shared exception types."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class DivergenceUndefinedError(InvalidInputError):
    """KL divergence requested for a non absolutely continuous pair."""


class PreconditionViolatedError(InvalidInputError):
    """A structural precondition (invariance, channel form) does not hold."""


class EnumerationTooLargeError(InvalidInputError):
    """Exact enumeration would exceed the configured state-space guard."""


class BoundUndefinedError(InvalidInputError):
    """A bound's denominator (minimum mass) is zero."""


class TrainingDivergedError(RuntimeError):
    """An estimator's objective became non-finite during training."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class FormatError(ValueError):
    """A binary file does not conform to the expected layout."""
