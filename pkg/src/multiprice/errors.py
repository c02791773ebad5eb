"""Exception hierarchy shared across the package."""


class MultipriceError(Exception):
    """Base class for all package errors."""


class InvalidPriceSet(MultipriceError):
    """Prices are not strictly increasing and positive."""


class DomainError(MultipriceError):
    """A function argument lies outside its domain."""


class InvalidRange(MultipriceError):
    """A price range or ratio parameter is degenerate."""


class ValidationError(MultipriceError):
    """A config, instance file, or CSV failed validation."""


class SolverLimitError(MultipriceError):
    """An iteration / size guard of a solver was exceeded."""
