"""Exception types raised across the package.

Each class maps onto one failure category so callers (and the CLI exit-code
table) can branch on the category instead of parsing messages.
"""


class StatMechError(Exception):
    """Base class for all package errors."""


class InvalidArgument(StatMechError, ValueError):
    pass


class DomainError(StatMechError, ValueError):
    pass


class OutOfRange(StatMechError, IndexError):
    pass


class NumericFailure(StatMechError, ArithmeticError):
    pass


class RegimeError(StatMechError, ValueError):
    """Parameters put the model outside the regime its formulas cover."""


class TooLarge(StatMechError, ValueError):
    """A finite instance exceeds the enumeration guard."""

    def __init__(self, message, dimension=None):
        super().__init__(message)
        self.dimension = dimension


class InsufficientData(StatMechError, ValueError):
    pass


class UnsupportedModel(StatMechError, TypeError):
    pass


class AmbiguousPhase(StatMechError, ValueError):
    """Two fixed-point branches tie; the caller gets both candidate values."""

    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)


class OutputError(StatMechError, OSError):
    """A result could not be written to its destination."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
