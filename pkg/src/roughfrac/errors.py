"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """A point lies outside the mathematical domain of an operation."""


class NumericError(RuntimeError):
    """A computation produced a non-finite or otherwise unusable value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
