"""SQL subset engine: parse, classify, execute, serialize."""

from .database import (
    Database,
    ExecOutcome,
    ResultSet,
    Row,
    TableState,
    Value,
    execute,
    make_table,
)
from .errors import (
    ArityMismatchError,
    DuplicateTableError,
    ExecError,
    InvalidOperationError,
    MultiStatementError,
    ParseError,
    ResourceLimitError,
    SqlError,
    TypeMismatchError,
    UnknownColumnError,
    UnknownTableError,
    UnsupportedError,
)
from .parser import parse
from .serialize import serialize_result
from .statements import (
    ColumnDef,
    ColumnType,
    Statement,
    StatementClass,
    classify,
    render,
    varchar,
)

__all__ = [
    "ArityMismatchError",
    "ColumnDef",
    "ColumnType",
    "Database",
    "DuplicateTableError",
    "ExecError",
    "ExecOutcome",
    "InvalidOperationError",
    "MultiStatementError",
    "ParseError",
    "ResourceLimitError",
    "ResultSet",
    "Row",
    "SqlError",
    "Statement",
    "StatementClass",
    "TableState",
    "TypeMismatchError",
    "UnknownColumnError",
    "UnknownTableError",
    "UnsupportedError",
    "Value",
    "classify",
    "execute",
    "make_table",
    "parse",
    "render",
    "serialize_result",
    "varchar",
]
