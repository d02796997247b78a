"""In-memory database and statement executor.

Value model: INT columns hold Python ints, VARCHAR and DATE columns hold
strings (dates as "YYYY-MM-DD"), SQL NULL is None. Execution is atomic: a
failing statement leaves the database exactly as it was.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from .errors import (
    ArityMismatchError,
    DuplicateTableError,
    InvalidOperationError,
    ResourceLimitError,
    TypeMismatchError,
    UnknownColumnError,
    UnknownTableError,
)
from .statements import (
    AlterTable,
    And,
    ColumnDef,
    ColumnRef,
    ColumnType,
    Comparison,
    CreateTable,
    DclStatement,
    Delete,
    Describe,
    DropTable,
    Expr,
    Insert,
    IsNull,
    Like,
    Literal,
    Not,
    Operand,
    Or,
    Select,
    Statement,
    TruncateTable,
    Update,
)

Value = int | str | None
Row = tuple[Value, ...]

MAX_ROWS_PER_TABLE = 5000
EVAL_BUDGET_SECONDS = 1.0

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass
class TableState:
    name: str
    columns: list[ColumnDef]
    rows: list[Row] = field(default_factory=list)

    def column_index(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise UnknownColumnError(f"unknown column {name!r} in table {self.name!r}")

    def clone(self) -> "TableState":
        return TableState(self.name, list(self.columns), list(self.rows))


@dataclass
class ResultSet:
    columns: list[str]
    rows: list[Row]
    ordered_flag: bool = False


@dataclass
class ExecOutcome:
    """Either a result set (SELECT, DESCRIBE) or an affected-row count."""

    result: ResultSet | None = None
    affected: int | None = None

    @property
    def is_rows(self) -> bool:
        return self.result is not None


class Database:
    """Named tables. Confine each instance to one execution context at a time."""

    def __init__(self) -> None:
        self.tables: dict[str, TableState] = {}

    def add_table(self, table: TableState) -> None:
        if table.name in self.tables:
            raise DuplicateTableError(f"table {table.name!r} already exists")
        self.tables[table.name] = table

    def bind_copy(self, table: TableState, as_name: str) -> None:
        """Attach a deep copy of a table under a different visible name."""
        copy = table.clone()
        copy.name = as_name
        self.add_table(copy)

    def get(self, name: str) -> TableState:
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTableError(f"unknown table {name!r}") from None

    def snapshot(self) -> dict[str, TableState]:
        return {name: t.clone() for name, t in self.tables.items()}


def execute(db: Database, stmt: Statement) -> ExecOutcome:
    """Run one parsed statement against db; raises ExecError subclasses on failure."""
    deadline = time.monotonic() + EVAL_BUDGET_SECONDS
    if isinstance(stmt, CreateTable):
        return _create(db, stmt)
    if isinstance(stmt, DropTable):
        db.get(stmt.table)
        del db.tables[stmt.table]
        return ExecOutcome(affected=0)
    if isinstance(stmt, TruncateTable):
        table = db.get(stmt.table)
        removed = len(table.rows)
        table.rows = []
        return ExecOutcome(affected=removed)
    if isinstance(stmt, AlterTable):
        return _alter(db, stmt)
    if isinstance(stmt, Describe):
        return _describe(db, stmt)
    if isinstance(stmt, Insert):
        return _insert(db, stmt)
    if isinstance(stmt, Select):
        return _select(db, stmt, deadline)
    if isinstance(stmt, Update):
        return _update(db, stmt, deadline)
    if isinstance(stmt, Delete):
        return _delete(db, stmt, deadline)
    if isinstance(stmt, DclStatement):
        raise InvalidOperationError("access-control statements cannot be executed here")
    raise InvalidOperationError(f"cannot execute {type(stmt).__name__}")


# --- DDL ---

def _create(db: Database, stmt: CreateTable) -> ExecOutcome:
    if stmt.table in db.tables:
        raise DuplicateTableError(f"table {stmt.table!r} already exists")
    db.tables[stmt.table] = TableState(stmt.table, list(stmt.columns))
    return ExecOutcome(affected=0)


def _alter(db: Database, stmt: AlterTable) -> ExecOutcome:
    table = db.get(stmt.table)
    if stmt.action == "ADD":
        col = stmt.column
        assert col is not None
        if any(c.name == col.name for c in table.columns):
            raise InvalidOperationError(f"column {col.name!r} already exists")
        if not col.nullable and table.rows:
            raise TypeMismatchError(
                f"cannot add NOT NULL column {col.name!r} to a non-empty table"
            )
        table.columns = table.columns + [col]
        table.rows = [row + (None,) for row in table.rows]
        return ExecOutcome(affected=0)
    if stmt.action == "DROP":
        assert stmt.column_name is not None
        idx = table.column_index(stmt.column_name)
        if len(table.columns) == 1:
            raise InvalidOperationError("cannot drop a table's last column")
        table.columns = table.columns[:idx] + table.columns[idx + 1:]
        table.rows = [row[:idx] + row[idx + 1:] for row in table.rows]
        return ExecOutcome(affected=0)
    # MODIFY: convert existing values to the new type
    col = stmt.column
    assert col is not None
    idx = table.column_index(col.name)
    converted = [
        row[:idx] + (_convert(row[idx], col, table.name),) + row[idx + 1:]
        for row in table.rows
    ]
    table.columns = table.columns[:idx] + [col] + table.columns[idx + 1:]
    table.rows = converted
    return ExecOutcome(affected=0)


def _convert(value: Value, col: ColumnDef, table_name: str) -> Value:
    if value is None:
        if not col.nullable:
            raise TypeMismatchError(f"column {col.name!r} has NULL values, cannot become NOT NULL")
        return None
    kind = col.ctype.kind
    if kind == "INT":
        if isinstance(value, int):
            return value
        try:
            return int(str(value).strip())
        except ValueError:
            raise TypeMismatchError(f"value {value!r} is not convertible to INT") from None
    text = str(value)
    return _check_value(text, col, table_name)


def _describe(db: Database, stmt: Describe) -> ExecOutcome:
    table = db.get(stmt.table)
    rows: list[Row] = [
        (col.name, col.ctype.render(), "YES" if col.nullable else "NO")
        for col in table.columns
    ]
    # definition order is meaningful, so keep it
    return ExecOutcome(result=ResultSet(["Field", "Type", "Null"], rows, ordered_flag=True))


# --- value checking ---

def _check_value(value: Value, col: ColumnDef, table_name: str) -> Value:
    """Validate one value against a column; returns the stored form."""
    if value is None:
        if not col.nullable:
            raise TypeMismatchError(f"column {col.name!r} of {table_name!r} is NOT NULL")
        return None
    kind = col.ctype.kind
    if kind == "INT":
        if not isinstance(value, int):
            raise TypeMismatchError(f"column {col.name!r} expects INT, got {value!r}")
        return value
    if not isinstance(value, str):
        raise TypeMismatchError(f"column {col.name!r} expects text, got {value!r}")
    if kind == "VARCHAR":
        assert col.ctype.length is not None
        if len(value) > col.ctype.length:
            raise TypeMismatchError(
                f"value too long for {col.name!r} VARCHAR({col.ctype.length})"
            )
        return value
    # DATE
    if not _DATE_RE.match(value) or not _valid_date(value):
        raise TypeMismatchError(f"column {col.name!r} expects a YYYY-MM-DD date, got {value!r}")
    return value


def _valid_date(text: str) -> bool:
    import datetime

    try:
        datetime.date.fromisoformat(text)
        return True
    except ValueError:
        return False


# --- DML ---

def _insert(db: Database, stmt: Insert) -> ExecOutcome:
    table = db.get(stmt.table)
    if stmt.columns is not None:
        indices = [table.column_index(c) for c in stmt.columns]
        if len(set(indices)) != len(indices):
            raise InvalidOperationError("duplicate column in INSERT column list")
        width = len(stmt.columns)
    else:
        indices = list(range(len(table.columns)))
        width = len(table.columns)
    new_rows: list[Row] = []
    for values in stmt.rows:
        if len(values) != width:
            raise ArityMismatchError(
                f"INSERT expects {width} values, got {len(values)}"
            )
        slots: list[Value] = [None] * len(table.columns)
        provided = set()
        for idx, literal in zip(indices, values):
            slots[idx] = literal.value
            provided.add(idx)
        for i, col in enumerate(table.columns):
            if i not in provided and not col.nullable:
                raise TypeMismatchError(f"column {col.name!r} is NOT NULL and has no value")
            slots[i] = _check_value(slots[i], table.columns[i], table.name)
        new_rows.append(tuple(slots))
    if len(table.rows) + len(new_rows) > MAX_ROWS_PER_TABLE:
        raise ResourceLimitError(
            f"table {table.name!r} would exceed {MAX_ROWS_PER_TABLE} rows"
        )
    table.rows = table.rows + new_rows
    return ExecOutcome(affected=len(new_rows))


def _update(db: Database, stmt: Update, deadline: float) -> ExecOutcome:
    table = db.get(stmt.table)
    assigns: list[tuple[int, Value]] = []
    seen = set()
    for col_name, literal in stmt.assignments:
        idx = table.column_index(col_name)
        if idx in seen:
            raise InvalidOperationError(f"column {col_name!r} assigned twice")
        seen.add(idx)
        assigns.append((idx, _check_value(literal.value, table.columns[idx], table.name)))
    predicate = _compile_where(stmt.where, table)
    new_rows: list[Row] = []
    affected = 0
    for row in table.rows:
        _check_budget(deadline)
        if predicate(row):
            affected += 1
            slots = list(row)
            for idx, value in assigns:
                slots[idx] = value
            new_rows.append(tuple(slots))
        else:
            new_rows.append(row)
    table.rows = new_rows
    return ExecOutcome(affected=affected)


def _delete(db: Database, stmt: Delete, deadline: float) -> ExecOutcome:
    table = db.get(stmt.table)
    predicate = _compile_where(stmt.where, table)
    kept: list[Row] = []
    for row in table.rows:
        _check_budget(deadline)
        if not predicate(row):
            kept.append(row)
    affected = len(table.rows) - len(kept)
    table.rows = kept
    return ExecOutcome(affected=affected)


# --- SELECT ---

def _select(db: Database, stmt: Select, deadline: float) -> ExecOutcome:
    if stmt.table is None:
        return _select_literals(stmt)
    table = db.get(stmt.table)
    predicate = _compile_where(stmt.where, table)
    rows = []
    for row in table.rows:
        _check_budget(deadline)
        if predicate(row):
            rows.append(row)

    # pipeline: filter -> sort -> project -> distinct -> limit
    for key in reversed(stmt.order_by):
        idx = table.column_index(key.column)
        kind = table.columns[idx].ctype.kind
        rows.sort(key=lambda r: _sort_key(r[idx], kind), reverse=key.descending)

    if stmt.items is None:
        names = [c.name for c in table.columns]
        projected = rows
    else:
        names = []
        pick: list[int | None] = []  # column index, or None for a pinned literal
        consts: list[Value] = []
        for item in stmt.items:
            if isinstance(item, ColumnRef):
                idx = table.column_index(item.name)
                names.append(table.columns[idx].name)
                pick.append(idx)
                consts.append(None)
            else:
                names.append(_literal_header(item))
                pick.append(None)
                consts.append(item.value)
        projected = [
            tuple(row[i] if i is not None else consts[j] for j, i in enumerate(pick))
            for row in rows
        ]

    if stmt.distinct:
        seen: set[Row] = set()
        deduped = []
        for row in projected:
            if row not in seen:
                seen.add(row)
                deduped.append(row)
        projected = deduped

    if stmt.limit is not None:
        projected = projected[: stmt.limit]

    return ExecOutcome(result=ResultSet(names, projected, ordered_flag=bool(stmt.order_by)))


def _select_literals(stmt: Select) -> ExecOutcome:
    assert stmt.items is not None
    names = []
    values = []
    for item in stmt.items:
        if isinstance(item, ColumnRef):
            raise UnknownColumnError(f"column {item.name!r} without a FROM table")
        names.append(_literal_header(item))
        values.append(item.value)
    rows = [tuple(values)]
    if stmt.distinct:
        rows = rows[:1]
    return ExecOutcome(result=ResultSet(names, rows, ordered_flag=False))


def _literal_header(lit: Literal) -> str:
    if lit.value is None:
        return "NULL"
    return str(lit.value)


def _sort_key(value: Value, kind: str):
    # NULLs sort before any value ascending (so after, descending)
    if value is None:
        return (0, 0)
    return (1, value)


def _check_budget(deadline: float) -> None:
    if time.monotonic() > deadline:
        raise ResourceLimitError("statement exceeded its evaluation budget")


# --- WHERE evaluation (three-valued logic) ---

def _compile_where(expr: Expr | None, table: TableState):
    """Type-check once against the schema, return a row predicate.

    Comparisons follow SQL three-valued logic: anything involving NULL is
    unknown, and unknown filters like false at the top level.
    """
    if expr is None:
        return lambda row: True
    checker = _build(expr, table)
    return lambda row: checker(row) is True


_TEXT_KINDS = {"VARCHAR", "DATE"}


def _operand_kind(op: Operand, table: TableState) -> tuple[str | None, int | None]:
    """(kind, column_index); kind None for the NULL literal."""
    if isinstance(op, ColumnRef):
        idx = table.column_index(op.name)
        kind = table.columns[idx].ctype.kind
        return ("INT" if kind == "INT" else "TEXT"), idx
    if op.value is None:
        return None, None
    return ("INT" if isinstance(op.value, int) else "TEXT"), None


def _operand_getter(op: Operand, idx: int | None):
    if isinstance(op, ColumnRef):
        assert idx is not None
        return lambda row: row[idx]
    value = op.value
    return lambda row: value


def _build(expr: Expr, table: TableState):
    if isinstance(expr, And):
        left, right = _build(expr.left, table), _build(expr.right, table)

        def eval_and(row):
            a, b = left(row), right(row)
            if a is False or b is False:
                return False
            if a is None or b is None:
                return None
            return True

        return eval_and
    if isinstance(expr, Or):
        left, right = _build(expr.left, table), _build(expr.right, table)

        def eval_or(row):
            a, b = left(row), right(row)
            if a is True or b is True:
                return True
            if a is None or b is None:
                return None
            return False

        return eval_or
    if isinstance(expr, Not):
        child = _build(expr.child, table)

        def eval_not(row):
            v = child(row)
            return None if v is None else not v

        return eval_not
    if isinstance(expr, IsNull):
        kind, idx = _operand_kind(expr.operand, table)
        get = _operand_getter(expr.operand, idx)
        if expr.negated:
            return lambda row: get(row) is not None
        return lambda row: get(row) is None
    if isinstance(expr, Like):
        kind, idx = _operand_kind(expr.operand, table)
        if kind == "INT":
            raise TypeMismatchError("LIKE requires a text operand")
        get = _operand_getter(expr.operand, idx)
        regex = _like_regex(expr.pattern)

        def eval_like(row):
            v = get(row)
            if v is None:
                return None
            return regex.match(v) is not None

        return eval_like
    if isinstance(expr, Comparison):
        lkind, lidx = _operand_kind(expr.left, table)
        rkind, ridx = _operand_kind(expr.right, table)
        if lkind is not None and rkind is not None and lkind != rkind:
            raise TypeMismatchError(
                f"cannot compare {lkind} with {rkind} in {expr.render()}"
            )
        get_l = _operand_getter(expr.left, lidx)
        get_r = _operand_getter(expr.right, ridx)
        op = expr.op

        def eval_cmp(row):
            a, b = get_l(row), get_r(row)
            if a is None or b is None:
                return None
            if op == "=":
                return a == b
            if op in ("<>", "!="):
                return a != b
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            return a >= b

        return eval_cmp
    raise InvalidOperationError(f"cannot evaluate {type(expr).__name__}")


def _like_regex(pattern: str):
    # % -> .*, _ -> ., everything else literal; case-sensitive full match
    parts = []
    for ch in pattern:
        if ch == "%":
            parts.append(".*")
        elif ch == "_":
            parts.append(".")
        else:
            parts.append(re.escape(ch))
    return re.compile("".join(parts) + r"\Z", re.DOTALL)


def make_table(name: str, columns: list[ColumnDef], rows: list[Row]) -> TableState:
    """Build a validated table (used for fixtures and sandboxes)."""
    seen = set()
    for col in columns:
        if col.name in seen:
            raise InvalidOperationError(f"duplicate column {col.name!r}")
        seen.add(col.name)
    table = TableState(name, list(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ArityMismatchError(
                f"row arity {len(row)} does not match {len(columns)} columns"
            )
        table.rows.append(tuple(
            _check_value(v, col, name) for v, col in zip(row, columns)
        ))
    if len(table.rows) > MAX_ROWS_PER_TABLE:
        raise ResourceLimitError(f"table {name!r} exceeds {MAX_ROWS_PER_TABLE} rows")
    return table
