"""
Error types raised by the library and mapped to exit codes by the CLI
"""


class RisBeamError(Exception):
    """Base class for all library errors"""


class ValidationError(RisBeamError, ValueError):
    """Bad configuration, dimension mismatch, stale trace or bad split"""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation"""


class DegenerateInputError(ValidationError):
    """Input has no defined direction or statistics (zero precoder, batch of one)"""


class ConditioningError(ValidationError):
    """Matrix is rank deficient where full rank is required"""


class FormatError(ValidationError):
    """Unreadable or unsupported dataset, checkpoint or manifest"""


class BudgetExceededError(RisBeamError):
    """Exhaustive enumeration would exceed the configured budget"""
