"""Exception types shared across the package."""


class SemlinkError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SemlinkError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(SemlinkError, ValueError):
    """A configuration object or parameter combination is invalid."""


class FormatError(SemlinkError, ValueError):
    """A file does not conform to its expected binary layout."""


class StateError(SemlinkError, RuntimeError):
    """An operation was invoked before its required state was established."""


class TrainingError(SemlinkError, RuntimeError):
    """Training failed, e.g. the loss became non-finite."""
