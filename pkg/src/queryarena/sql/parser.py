"""Recursive-descent parser for the SQL subset.

Accepts exactly one statement per submission. A second statement after ";"
is reported as MultiStatementError so callers can treat it as an injection
attempt rather than a syntax slip.
"""

from __future__ import annotations

from .errors import MultiStatementError, ParseError, UnsupportedError
from .lexer import Token, tokenize
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
    Insert,
    IsNull,
    Like,
    Literal,
    Not,
    Operand,
    Or,
    OrderKey,
    Select,
    Statement,
    TruncateTable,
    Update,
)

_COMPARE_OPS = {"=", "<>", "!=", "<", "<=", ">", ">="}
_UNSUPPORTED_SELECT = {"JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "GROUP", "HAVING", "UNION", "ON"}
_MAX_QUERY_LENGTH = 10_000


def parse(text: str) -> Statement:
    """Parse one statement; raises ParseError / UnsupportedError / MultiStatementError."""
    if not text or not text.strip():
        raise ParseError("empty query", offset=0, token="")
    if len(text) > _MAX_QUERY_LENGTH:
        raise ParseError("query too long", offset=_MAX_QUERY_LENGTH, token="")
    parser = _Parser(tokenize(text))
    stmt = parser.statement()
    parser.finish()
    return stmt


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.value in words

    def accept_keyword(self, *words: str) -> Token | None:
        if self.at_keyword(*words):
            return self.advance()
        return None

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "KEYWORD" or tok.value != word:
            raise ParseError(f"expected {word}", offset=tok.offset, token=tok.text)
        return self.advance()

    def accept_symbol(self, sym: str) -> Token | None:
        tok = self.peek()
        if tok.kind == "SYMBOL" and tok.value == sym:
            return self.advance()
        return None

    def expect_symbol(self, sym: str) -> Token:
        tok = self.peek()
        if tok.kind != "SYMBOL" or tok.value != sym:
            raise ParseError(f"expected {sym!r}", offset=tok.offset, token=tok.text)
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError(f"expected {what}", offset=tok.offset, token=tok.text)
        return str(self.advance().value)

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, offset=tok.offset, token=tok.text)

    # --- statement dispatch ---

    def statement(self) -> Statement:
        tok = self.peek()
        if tok.kind != "KEYWORD":
            raise self.fail("expected a statement keyword")
        word = str(tok.value)
        if word == "SELECT":
            return self.select()
        if word == "INSERT":
            return self.insert()
        if word == "UPDATE":
            return self.update()
        if word == "DELETE":
            return self.delete()
        if word == "CREATE":
            return self.create()
        if word == "DROP":
            return self.drop()
        if word == "ALTER":
            return self.alter()
        if word == "TRUNCATE":
            return self.truncate()
        if word in ("DESCRIBE", "DESC"):
            return self.describe()
        if word in ("GRANT", "REVOKE"):
            return self.dcl()
        raise self.fail(f"cannot start a statement with {word}")

    def finish(self) -> None:
        # one optional trailing ";"; anything beyond it is a second statement
        semi = self.accept_symbol(";")
        tok = self.peek()
        if tok.kind != "EOF":
            if semi:
                raise MultiStatementError(
                    "multiple statements are not allowed", offset=tok.offset, token=tok.text,
                )
            raise self.fail("unexpected trailing input")

    # --- DDL ---

    def create(self) -> CreateTable:
        self.expect_keyword("CREATE")
        if not self.at_keyword("TABLE"):
            raise UnsupportedError(
                "only CREATE TABLE is supported",
                offset=self.peek().offset, token=self.peek().text,
            )
        self.advance()
        table = self.expect_ident("table name")
        self.expect_symbol("(")
        columns = [self.column_def()]
        while self.accept_symbol(","):
            columns.append(self.column_def())
        self.expect_symbol(")")
        seen = set()
        for col in columns:
            if col.name in seen:
                raise self.fail(f"duplicate column {col.name}")
            seen.add(col.name)
        return CreateTable(table, tuple(columns))

    def column_def(self) -> ColumnDef:
        name = self.expect_ident("column name")
        ctype = self.column_type()
        nullable = True
        if self.accept_keyword("NOT"):
            self.expect_keyword("NULL")
            nullable = False
        elif self.accept_keyword("NULL"):
            nullable = True
        if self.at_keyword("PRIMARY", "KEY"):
            tok = self.peek()
            raise UnsupportedError("key constraints are not supported", offset=tok.offset, token=tok.text)
        return ColumnDef(name, ctype, nullable)

    def column_type(self) -> ColumnType:
        tok = self.peek()
        if self.accept_keyword("INT", "INTEGER"):
            return ColumnType("INT")
        if self.accept_keyword("DATE"):
            return ColumnType("DATE")
        if self.accept_keyword("VARCHAR"):
            self.expect_symbol("(")
            length_tok = self.peek()
            if length_tok.kind != "INT":
                raise ParseError("expected VARCHAR length", offset=length_tok.offset, token=length_tok.text)
            length = int(self.advance().value)
            if length < 1:
                raise ParseError("VARCHAR length must be positive", offset=length_tok.offset, token=length_tok.text)
            self.expect_symbol(")")
            return ColumnType("VARCHAR", length)
        raise ParseError("expected a column type", offset=tok.offset, token=tok.text)

    def drop(self) -> DropTable:
        self.expect_keyword("DROP")
        if not self.at_keyword("TABLE"):
            raise UnsupportedError(
                "only DROP TABLE is supported",
                offset=self.peek().offset, token=self.peek().text,
            )
        self.advance()
        return DropTable(self.expect_ident("table name"))

    def alter(self) -> AlterTable:
        self.expect_keyword("ALTER")
        self.expect_keyword("TABLE")
        table = self.expect_ident("table name")
        if self.accept_keyword("ADD"):
            self.accept_keyword("COLUMN")
            return AlterTable(table, "ADD", column=self.column_def())
        if self.accept_keyword("DROP"):
            self.accept_keyword("COLUMN")
            return AlterTable(table, "DROP", column_name=self.expect_ident("column name"))
        if self.accept_keyword("MODIFY"):
            self.accept_keyword("COLUMN")
            return AlterTable(table, "MODIFY", column=self.column_def())
        raise self.fail("expected ADD, DROP or MODIFY")

    def truncate(self) -> TruncateTable:
        self.expect_keyword("TRUNCATE")
        self.expect_keyword("TABLE")
        return TruncateTable(self.expect_ident("table name"))

    def describe(self) -> Describe:
        self.advance()  # DESCRIBE or DESC
        return Describe(self.expect_ident("table name"))

    def dcl(self) -> DclStatement:
        verb = str(self.advance().value)
        tail: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "EOF" or (tok.kind == "SYMBOL" and tok.value == ";"):
                break
            tail.append(tok.text)
            self.advance()
        return DclStatement(verb, tuple(tail))

    # --- DML ---

    def insert(self) -> Insert:
        self.expect_keyword("INSERT")
        self.expect_keyword("INTO")
        table = self.expect_ident("table name")
        columns: tuple[str, ...] | None = None
        if self.accept_symbol("("):
            names = [self.expect_ident("column name")]
            while self.accept_symbol(","):
                names.append(self.expect_ident("column name"))
            self.expect_symbol(")")
            columns = tuple(names)
        if self.at_keyword("SELECT"):
            tok = self.peek()
            raise UnsupportedError("INSERT ... SELECT is not supported", offset=tok.offset, token=tok.text)
        self.expect_keyword("VALUES")
        rows = [self.value_tuple()]
        while self.accept_symbol(","):
            rows.append(self.value_tuple())
        return Insert(table, columns, tuple(rows))

    def value_tuple(self) -> tuple[Literal, ...]:
        self.expect_symbol("(")
        values = [self.literal()]
        while self.accept_symbol(","):
            values.append(self.literal())
        self.expect_symbol(")")
        return tuple(values)

    def literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "SYMBOL" and tok.value == "-":
            self.advance()
            num = self.peek()
            if num.kind != "INT":
                raise ParseError("expected a number after '-'", offset=num.offset, token=num.text)
            self.advance()
            return Literal(-int(num.value))
        if tok.kind == "INT":
            self.advance()
            return Literal(int(tok.value))
        if tok.kind == "STRING":
            self.advance()
            return Literal(str(tok.value))
        if self.accept_keyword("NULL"):
            return Literal(None)
        if tok.kind == "SYMBOL" and tok.value == "(":
            nxt = self.tokens[self.pos + 1]
            if nxt.kind == "KEYWORD" and nxt.value == "SELECT":
                raise UnsupportedError("subqueries are not supported", offset=tok.offset, token=tok.text)
        raise self.fail("expected a literal value")

    def update(self) -> Update:
        self.expect_keyword("UPDATE")
        table = self.expect_ident("table name")
        self.expect_keyword("SET")
        assignments = [self.assignment()]
        while self.accept_symbol(","):
            assignments.append(self.assignment())
        where = self.where_clause()
        return Update(table, tuple(assignments), where)

    def assignment(self) -> tuple[str, Literal]:
        col = self.expect_ident("column name")
        self.expect_symbol("=")
        return col, self.literal()

    def delete(self) -> Delete:
        self.expect_keyword("DELETE")
        self.expect_keyword("FROM")
        table = self.expect_ident("table name")
        return Delete(table, self.where_clause())

    # --- SELECT ---

    def select(self) -> Select:
        self.expect_keyword("SELECT")
        distinct = self.accept_keyword("DISTINCT") is not None
        items: tuple[Operand, ...] | None
        if self.accept_symbol("*"):
            items = None
        else:
            first = self.select_item()
            out = [first]
            while self.accept_symbol(","):
                out.append(self.select_item())
            items = tuple(out)
        if not self.accept_keyword("FROM"):
            # FROM-less literal select: no further clauses
            if items is None:
                raise self.fail("SELECT * requires FROM")
            return Select(None, items, distinct)
        table = self.expect_ident("table name")
        self.reject_unsupported_select_tail()
        where = self.where_clause()
        self.reject_unsupported_select_tail()
        order_by: tuple[OrderKey, ...] = ()
        if self.accept_keyword("ORDER"):
            self.expect_keyword("BY")
            keys = [self.order_key()]
            while self.accept_symbol(","):
                keys.append(self.order_key())
            order_by = tuple(keys)
        limit: int | None = None
        if self.accept_keyword("LIMIT"):
            tok = self.peek()
            if tok.kind != "INT":
                raise ParseError("expected LIMIT count", offset=tok.offset, token=tok.text)
            limit = int(self.advance().value)
        return Select(table, items, distinct, where, order_by, limit)

    def select_item(self) -> Operand:
        tok = self.peek()
        if tok.kind == "IDENT":
            nxt = self.tokens[self.pos + 1]
            if nxt.kind == "SYMBOL" and nxt.value == "(":
                raise UnsupportedError(
                    "function calls and aggregates are not supported",
                    offset=tok.offset, token=tok.text,
                )
            self.advance()
            return ColumnRef(str(tok.value))
        return self.literal()

    def reject_unsupported_select_tail(self) -> None:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value in _UNSUPPORTED_SELECT:
            raise UnsupportedError(f"{tok.value} is not supported", offset=tok.offset, token=tok.text)
        if tok.kind == "SYMBOL" and tok.value == ",":
            raise UnsupportedError("multiple tables are not supported", offset=tok.offset, token=tok.text)

    def order_key(self) -> OrderKey:
        column = self.expect_ident("column name")
        if self.accept_keyword("DESC"):
            return OrderKey(column, descending=True)
        self.accept_keyword("ASC")
        return OrderKey(column, descending=False)

    # --- WHERE expressions ---

    def where_clause(self):
        if self.accept_keyword("WHERE"):
            return self.or_expr()
        return None

    def or_expr(self):
        node = self.and_expr()
        while self.accept_keyword("OR"):
            node = Or(node, self.and_expr())
        return node

    def and_expr(self):
        node = self.not_expr()
        while self.accept_keyword("AND"):
            node = And(node, self.not_expr())
        return node

    def not_expr(self):
        if self.accept_keyword("NOT"):
            return Not(self.not_expr())
        return self.predicate()

    def predicate(self):
        if self.accept_symbol("("):
            inner = self.or_expr()
            self.expect_symbol(")")
            return inner
        left = self.operand()
        tok = self.peek()
        if tok.kind == "SYMBOL" and tok.value in _COMPARE_OPS:
            op = str(self.advance().value)
            return Comparison(op, left, self.operand())
        if self.accept_keyword("LIKE"):
            return Like(left, self.like_pattern())
        if self.accept_keyword("NOT"):
            self.expect_keyword("LIKE")
            return Not(Like(left, self.like_pattern()))
        if self.accept_keyword("IS"):
            negated = self.accept_keyword("NOT") is not None
            self.expect_keyword("NULL")
            return IsNull(left, negated)
        raise self.fail("expected a comparison")

    def like_pattern(self) -> str:
        tok = self.peek()
        if tok.kind != "STRING":
            raise ParseError("LIKE pattern must be a string", offset=tok.offset, token=tok.text)
        self.advance()
        return str(tok.value)

    def operand(self) -> Operand:
        tok = self.peek()
        if tok.kind == "IDENT":
            self.advance()
            return ColumnRef(str(tok.value))
        return self.literal()
