"""Exception types shared across the package."""


class PGSSError(Exception):
    """Base class for package errors."""


class InputError(PGSSError, ValueError):
    """Invalid parameters or malformed input data."""


class NumericError(PGSSError, ArithmeticError):
    """A computation left the representable range (overflow, non-finite state)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InternalError(PGSSError, RuntimeError):
    """An invariant that holds for valid inputs was violated; indicates a bug."""
