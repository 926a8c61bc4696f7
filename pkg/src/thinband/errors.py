"""Exception types shared across the package."""


class ThinbandError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    kind = "error"


class InputError(ThinbandError, ValueError):
    """Invalid arguments or malformed input data."""

    exit_code = 2
    kind = "input"


class ResourceError(ThinbandError):
    """A configured size or work budget would be exceeded."""

    exit_code = 3
    kind = "resource"


class NumericError(ThinbandError, ArithmeticError):
    """A numerical routine failed to reach its requested accuracy."""

    exit_code = 4
    kind = "numeric"
