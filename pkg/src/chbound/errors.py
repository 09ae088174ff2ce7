"""Exception hierarchy shared across the package.

``ValidationError`` covers bad parameters and malformed model specs;
``BudgetError`` and its subclasses cover every "the computation would be
too large" condition, so callers can map the two families to distinct
exit codes without enumerating leaf classes.
"""


class ChboundError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ChboundError, ValueError):
    """Invalid parameters, model specification, or argument domain."""


class BudgetError(ChboundError, RuntimeError):
    """A configured compute budget or capability limit was exceeded."""


class SupportTooLargeError(BudgetError):
    """Exact enumeration requested on a support larger than the atom cap."""


class SubsetBudgetError(BudgetError):
    """Moment certification would enumerate more subsets than allowed."""


class RejectionBudgetError(BudgetError):
    """Conditional sampling ran out of proposals before enough acceptances."""


class BudgetOverflowError(BudgetError):
    """Requested budgets do not fit in double precision (alpha too small)."""
