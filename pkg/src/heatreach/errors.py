"""Exception hierarchy shared by all modules.

The CLI maps :class:`PreconditionError` (and its subclasses) to exit code 2
and :class:`AccuracyError` to exit code 3.
"""


class HeatReachError(Exception):
    """Base class for every error raised by :mod:`heatreach`."""


class PreconditionError(HeatReachError, ValueError):
    """A documented precondition or theorem hypothesis does not hold."""


class InvalidArgument(PreconditionError):
    pass


class DomainError(PreconditionError):
    """Argument outside the domain where the quantity is defined."""


class BranchCutError(DomainError):
    """Square-root argument lies on the negative real axis."""


class LayoutMismatch(InvalidArgument):
    """A density was combined with an operator built on another node layout."""


class NumericalFailure(HeatReachError, ArithmeticError):
    """Non-finite values met during evaluation."""


class AccuracyError(HeatReachError):
    """A computed quantity missed its accuracy target."""


class CapabilityError(AccuracyError):
    """The requested tolerance is out of reach for the configured limits."""


class ConsistencyError(AccuracyError):
    """An internal identity (closure, positivity, ...) was violated."""
