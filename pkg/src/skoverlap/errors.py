"""Exception types shared across the package.

The CLI maps each family onto a stable exit code, so new errors should
subclass one of these rather than raising bare ``ValueError``.
"""


class SKOverlapError(Exception):
    """Base class for all package errors."""


class DomainError(SKOverlapError):
    """Input lies outside the region where the expansion is defined."""


class PoleError(DomainError, ZeroDivisionError):
    """A rational function was evaluated at a zero of its denominator."""


class BudgetRefused(DomainError):
    """Requested expansion order is too small for the monomial."""


class GuardError(DomainError):
    """An enumeration or cost guard rejected the request."""


class RankDeficiencyError(DomainError):
    """Not enough distinct system sizes to fit the requested series."""


class SelfTermMismatch(SKOverlapError):
    """The regenerated self-term did not carry the expected beta^2 weight.

    This signals a bug in the transformation pipeline, never bad input.
    """


class ParseError(SKOverlapError):
    """Malformed monomial expression text."""

    def __init__(self, message: str, column: int):
        super().__init__(f"column {column}: {message}")
        self.column = column
