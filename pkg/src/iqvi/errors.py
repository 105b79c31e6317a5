"""Exception hierarchy.

The CLI maps these onto exit codes: ``InputError`` -> 2,
``NumericError`` -> 3, ``RegimeError`` -> 4.
"""


class IQVIError(Exception):
    """Base class for all library errors."""


class InputError(IQVIError, ValueError):
    """Malformed input: dimension mismatch, bad schema, unsupported size."""


class ParameterError(IQVIError, ValueError):
    """Parameters fall outside the regime an operation is defined for."""


class RegimeError(ParameterError):
    """A hypothesis required by the operation does not hold."""


class NumericError(IQVIError, ArithmeticError):
    """Non-finite arithmetic.  ``partial`` carries whatever was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
