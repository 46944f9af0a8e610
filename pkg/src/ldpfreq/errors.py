"""Exception types raised across the package."""


class LDPError(Exception):
    """Base class for all errors raised by ldpfreq."""


class InvalidParameterError(LDPError, ValueError):
    """A privacy budget, probability or domain size is out of range."""


class InvalidInputError(LDPError, ValueError):
    """A user value lies outside its attribute domain."""


class EmptyInputError(LDPError, ValueError):
    """Estimation was requested with zero reports."""


class DegenerateParameterError(InvalidParameterError):
    """Perturbation parameters make the estimator undefined (p == q)."""


class InfeasibleBudgetError(InvalidParameterError):
    """No valid two-round parameters exist for the requested budgets."""


class DecodeError(LDPError, ValueError):
    """A report does not match the protocol expected by an accumulator."""


class DomainError(LDPError, ValueError):
    """Argument outside the domain of a special function."""


class EnumerationLimitError(LDPError, ValueError):
    """Exact channel enumeration would be too large."""


class LoadError(LDPError):
    """A dataset or coordinate file could not be parsed."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class MemoizationError(LDPError):
    """A memoized first-round report would be regenerated."""


class OutOfRegimeError(InvalidParameterError):
    """Parameters outside the range where a mechanism's guarantee holds."""
