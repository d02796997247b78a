"""Error types raised by the SQL parser and executor."""

from __future__ import annotations


class SqlError(Exception):
    """Base class for all engine errors."""


class ParseError(SqlError):
    """Malformed input text."""

    def __init__(self, message: str, *, offset: int = 0, token: str = ""):
        super().__init__(message)
        self.offset = offset
        self.token = token


class MultiStatementError(ParseError):
    """More than one statement in a single submission."""


class UnsupportedError(ParseError):
    """Recognizably valid SQL that falls outside the supported subset."""


class ExecError(SqlError):
    """Base class for execution failures; the database is left untouched."""


class UnknownTableError(ExecError):
    pass


class UnknownColumnError(ExecError):
    pass


class TypeMismatchError(ExecError):
    pass


class DuplicateTableError(ExecError):
    pass


class ArityMismatchError(ExecError):
    pass


class ResourceLimitError(ExecError):
    pass


class InvalidOperationError(ExecError):
    """Structurally impossible mutation, e.g. dropping a table's last column."""
