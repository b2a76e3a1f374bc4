"""Exception types shared across the workbench."""


class DiophLabError(Exception):
    """Base class for workbench errors."""


class InsufficientDataError(DiophLabError):
    """Too few records/convergents to produce an estimate."""


class BudgetExceededError(DiophLabError):
    """A search would exceed the candidate-evaluation budget."""


class UnsupportedDimensionError(DiophLabError):
    """Dimension above the desk-scale guard."""


class InvalidTargetError(DiophLabError):
    """A construction target outside its valid range."""


class DomainError(DiophLabError):
    """Closed-form evaluated outside its domain."""
