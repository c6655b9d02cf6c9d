"""Exception hierarchy shared by all modules."""


class LogIDError(Exception):
    """Base class for library errors."""


class DomainError(LogIDError, ValueError):
    """Parameters lie outside the region where a quantity is defined or finite."""


class RangeError(LogIDError, OverflowError):
    """An intermediate quantity exceeds the floating-point exponent range."""


class AccuracyError(LogIDError, RuntimeError):
    """Requested accuracy was not reached within the work budget.

    The best available estimate is kept on the exception so callers can
    still inspect it.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class BudgetError(LogIDError, RuntimeError):
    """An exact enumeration would exceed its term budget."""
