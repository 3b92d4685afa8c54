"""Exception hierarchy.

Every domain failure derives from :class:`EthicaError`; the CLI maps those to
exit status 1 and plain ``OSError`` to exit status 2.
"""

from __future__ import annotations


class EthicaError(Exception):
    """Base class for domain and validation failures."""


class ParseError(EthicaError):
    """Malformed input text. Carries a 1-based line and/or 0-based column."""

    def __init__(self, message: str, *, line: int | None = None,
                 column: int | None = None, source: str | None = None):
        self.line = line
        self.column = column
        self.source = source
        where = []
        if source:
            where.append(source)
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"position {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.message = message


class ValidationError(EthicaError):
    """Structurally valid input that violates a model invariant."""


class EvaluationError(EthicaError):
    """A relational expression could not be evaluated."""


class TransformError(EthicaError):
    """A transformation's preconditions do not hold."""
