"""Exception types shared across the package."""


class BroadlearnError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(BroadlearnError, ValueError):
    """Operands have empty or incompatible shapes."""


class DataError(BroadlearnError, ValueError):
    """Input data violates a contract (bad labels, non-finite values, ...)."""


class ParseError(DataError):
    """A feature file could not be parsed; the message carries the line number."""


class StateError(BroadlearnError, RuntimeError):
    """The operation needs state the object does not carry (unfitted layer, model without a cached pseudoinverse)."""


class UsageError(BroadlearnError):
    """Bad command-line arguments."""
