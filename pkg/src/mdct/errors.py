"""Exception types shared across the package."""


class MDCTError(Exception):
    """Base class for all package errors."""


class ConfigError(MDCTError, ValueError):
    """Invalid configuration: grid spec, hyperparameters, chain settings."""


class DataError(MDCTError, ValueError):
    """Malformed or inconsistent input data."""


class OutOfDomainError(DataError):
    """A location falls outside the domain box."""


class NumericalError(MDCTError, ArithmeticError):
    """A factorization or distribution parameter became unusable."""
