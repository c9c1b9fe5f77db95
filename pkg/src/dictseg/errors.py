"""Exception types shared across the package."""


class DictsegError(Exception):
    """Base class for all package errors."""

    category = "error"


class ValidationError(DictsegError, ValueError):
    """A precondition on user-supplied values does not hold."""

    category = "validation"


class DataError(DictsegError):
    """An input file could not be parsed or resolved."""

    category = "data"


class ComputeError(DictsegError):
    """A numerical routine could not produce a usable result."""

    category = "compute"
