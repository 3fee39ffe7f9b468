"""Parse and perception errors with byte-offset diagnostics."""

from __future__ import annotations


class SmilesError(ValueError):
    """Base class for molecule-string parse and perception failures.

    ``offset`` is the 0-based byte offset into the input where the problem was
    detected (-1 when not tied to a position); ``expected`` lists the token
    kinds that would have been legal there.
    """

    def __init__(self, message: str, offset: int = -1, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        detail = message
        if offset >= 0:
            detail += f" (byte offset {offset})"
        if expected:
            detail += f"; expected one of: {', '.join(expected)}"
        super().__init__(detail)


class EmptyInputError(SmilesError):
    pass


class UnclosedRingError(SmilesError):
    pass


class UnbalancedParenError(SmilesError):
    pass


class UnknownElementError(SmilesError):
    pass


class ValenceViolationError(SmilesError):
    pass
