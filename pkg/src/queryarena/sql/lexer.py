"""Tokenizer for the SQL subset. Tracks byte offsets for error reporting."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = {
    "SELECT", "DISTINCT", "FROM", "WHERE", "ORDER", "BY", "ASC", "DESC",
    "LIMIT", "INSERT", "INTO", "VALUES", "UPDATE", "SET", "DELETE",
    "CREATE", "TABLE", "DROP", "ALTER", "ADD", "MODIFY", "COLUMN",
    "TRUNCATE", "DESCRIBE", "AND", "OR", "NOT", "LIKE", "IS", "NULL",
    "INT", "INTEGER", "VARCHAR", "DATE", "GRANT", "REVOKE",
    # recognized so they can be refused with a clear "unsupported" error
    "JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "ON", "GROUP", "HAVING",
    "UNION", "PRIMARY", "KEY",
}

SYMBOLS = ("<>", "<=", ">=", "!=", "=", "<", ">", "(", ")", ",", ";", "*", "-")


@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD | IDENT | INT | STRING | SYMBOL | EOF
    value: str | int
    offset: int

    @property
    def text(self) -> str:
        return str(self.value)


def tokenize(text: str) -> list[Token]:
    """Split query text into tokens; raises ParseError on unlexable input."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "'":
            value, i = _read_string(text, i)
            tokens.append(Token("STRING", value, i))
            continue
        if ch.isdigit():
            start = i
            while i < n and text[i].isdigit():
                i += 1
            if i < n and (text[i].isalpha() or text[i] == "_"):
                raise ParseError("malformed number", offset=start, token=text[start:i + 1])
            tokens.append(Token("INT", int(text[start:i]), start))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token("KEYWORD", upper, start))
            else:
                # identifiers are case-insensitive; canonical form is lowercase
                tokens.append(Token("IDENT", word.lower(), start))
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYMBOL", sym, i))
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", offset=i, token=ch)
    tokens.append(Token("EOF", "", n))
    return tokens


def _read_string(text: str, start: int) -> tuple[str, int]:
    # single-quoted, with '' as the escaped quote
    i = start + 1
    chunks: list[str] = []
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "'":
            if i + 1 < n and text[i + 1] == "'":
                chunks.append("'")
                i += 2
                continue
            return "".join(chunks), i + 1
        chunks.append(ch)
        i += 1
    raise ParseError("unterminated string literal", offset=start, token=text[start:])
