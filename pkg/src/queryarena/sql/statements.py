"""Parsed statement representations for the supported SQL subset."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class StatementClass(Enum):
    CREATE = "CREATE"
    DROP = "DROP"
    ALTER = "ALTER"
    TRUNCATE = "TRUNCATE"
    DESCRIBE = "DESCRIBE"
    SELECT = "SELECT"
    INSERT = "INSERT"
    UPDATE = "UPDATE"
    DELETE = "DELETE"
    DCL_OTHER = "DCL_OTHER"


@dataclass(frozen=True)
class ColumnType:
    kind: str  # INT | VARCHAR | DATE
    length: int | None = None  # VARCHAR only

    def render(self) -> str:
        if self.kind == "VARCHAR":
            return f"VARCHAR({self.length})"
        return self.kind


INT = ColumnType("INT")
DATE = ColumnType("DATE")


def varchar(length: int) -> ColumnType:
    return ColumnType("VARCHAR", length)


@dataclass(frozen=True)
class ColumnDef:
    name: str
    ctype: ColumnType
    nullable: bool = True

    def render(self) -> str:
        null = "" if self.nullable else " NOT NULL"
        return f"{self.name} {self.ctype.render()}{null}"


# --- scalar expression operands ---

@dataclass(frozen=True)
class ColumnRef:
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class Literal:
    value: int | str | None  # None encodes SQL NULL

    def render(self) -> str:
        if self.value is None:
            return "NULL"
        if isinstance(self.value, int):
            return str(self.value)
        return "'" + self.value.replace("'", "''") + "'"


Operand = ColumnRef | Literal


# --- boolean expression tree ---

@dataclass(frozen=True)
class Comparison:
    op: str  # = <> != < <= > >=
    left: Operand
    right: Operand

    def render(self) -> str:
        return f"{self.left.render()} {self.op} {self.right.render()}"


@dataclass(frozen=True)
class Like:
    operand: Operand
    pattern: str  # % and _ wildcards

    def render(self) -> str:
        return f"{self.operand.render()} LIKE {Literal(self.pattern).render()}"


@dataclass(frozen=True)
class IsNull:
    operand: Operand
    negated: bool = False

    def render(self) -> str:
        middle = "IS NOT NULL" if self.negated else "IS NULL"
        return f"{self.operand.render()} {middle}"


@dataclass(frozen=True)
class Not:
    child: "Expr"

    def render(self) -> str:
        return f"NOT ({self.child.render()})"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"

    def render(self) -> str:
        return f"({self.left.render()} AND {self.right.render()})"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"

    def render(self) -> str:
        return f"({self.left.render()} OR {self.right.render()})"


Expr = Comparison | Like | IsNull | Not | And | Or


@dataclass(frozen=True)
class OrderKey:
    column: str
    descending: bool = False

    def render(self) -> str:
        return f"{self.column} DESC" if self.descending else f"{self.column} ASC"


# --- statements ---

@dataclass(frozen=True)
class CreateTable:
    table: str
    columns: tuple[ColumnDef, ...]

    statement_class = StatementClass.CREATE

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        cols = ", ".join(c.render() for c in self.columns)
        return f"CREATE TABLE {self.table} ({cols})"


@dataclass(frozen=True)
class DropTable:
    table: str

    statement_class = StatementClass.DROP

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        return f"DROP TABLE {self.table}"


@dataclass(frozen=True)
class AlterTable:
    table: str
    action: str  # ADD | DROP | MODIFY
    column: ColumnDef | None = None  # ADD / MODIFY
    column_name: str | None = None  # DROP

    statement_class = StatementClass.ALTER

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        if self.action == "DROP":
            return f"ALTER TABLE {self.table} DROP COLUMN {self.column_name}"
        assert self.column is not None
        return f"ALTER TABLE {self.table} {self.action} COLUMN {self.column.render()}"


@dataclass(frozen=True)
class TruncateTable:
    table: str

    statement_class = StatementClass.TRUNCATE

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        return f"TRUNCATE TABLE {self.table}"


@dataclass(frozen=True)
class Describe:
    table: str

    statement_class = StatementClass.DESCRIBE

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        return f"DESCRIBE {self.table}"


@dataclass(frozen=True)
class Insert:
    table: str
    columns: tuple[str, ...] | None  # None means positional over all table columns
    rows: tuple[tuple[Literal, ...], ...]

    statement_class = StatementClass.INSERT

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        cols = f" ({', '.join(self.columns)})" if self.columns is not None else ""
        tuples = ", ".join(
            "(" + ", ".join(v.render() for v in row) + ")" for row in self.rows
        )
        return f"INSERT INTO {self.table}{cols} VALUES {tuples}"


@dataclass(frozen=True)
class Select:
    table: str | None  # None for FROM-less literal selects
    items: tuple[Operand, ...] | None  # None means *
    distinct: bool = False
    where: Expr | None = None
    order_by: tuple[OrderKey, ...] = ()
    limit: int | None = None

    statement_class = StatementClass.SELECT

    @property
    def target_table(self) -> str | None:
        return self.table

    def render(self) -> str:
        parts = ["SELECT"]
        if self.distinct:
            parts.append("DISTINCT")
        parts.append("*" if self.items is None else ", ".join(i.render() for i in self.items))
        if self.table is not None:
            parts.append(f"FROM {self.table}")
        if self.where is not None:
            parts.append(f"WHERE {self.where.render()}")
        if self.order_by:
            parts.append("ORDER BY " + ", ".join(k.render() for k in self.order_by))
        if self.limit is not None:
            parts.append(f"LIMIT {self.limit}")
        return " ".join(parts)


@dataclass(frozen=True)
class Update:
    table: str
    assignments: tuple[tuple[str, Literal], ...]
    where: Expr | None = None

    statement_class = StatementClass.UPDATE

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        sets = ", ".join(f"{col} = {val.render()}" for col, val in self.assignments)
        text = f"UPDATE {self.table} SET {sets}"
        if self.where is not None:
            text += f" WHERE {self.where.render()}"
        return text


@dataclass(frozen=True)
class Delete:
    table: str
    where: Expr | None = None

    statement_class = StatementClass.DELETE

    @property
    def target_table(self) -> str:
        return self.table

    def render(self) -> str:
        text = f"DELETE FROM {self.table}"
        if self.where is not None:
            text += f" WHERE {self.where.render()}"
        return text


@dataclass(frozen=True)
class DclStatement:
    """GRANT/REVOKE, parsed only far enough to be classified and rendered back."""

    verb: str  # GRANT | REVOKE
    tail: tuple[str, ...]  # remaining raw tokens

    statement_class = StatementClass.DCL_OTHER

    @property
    def target_table(self) -> None:
        return None

    def render(self) -> str:
        return " ".join((self.verb,) + self.tail)


Statement = (
    CreateTable
    | DropTable
    | AlterTable
    | TruncateTable
    | Describe
    | Insert
    | Select
    | Update
    | Delete
    | DclStatement
)


def classify(stmt: Statement) -> StatementClass:
    """Return the statement's command class."""
    return stmt.statement_class


def render(stmt: Statement) -> str:
    """Render a statement back to canonical SQL text (round-trips through parse)."""
    return stmt.render()
