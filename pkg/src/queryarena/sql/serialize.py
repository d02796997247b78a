"""Canonical result-set serialization used for answer comparison."""

from __future__ import annotations

from .database import ResultSet, Value


def render_value(value: Value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, int):
        return str(value)
    return value


def serialize_result(rs: ResultSet) -> str:
    """Pipe-and-newline form: header line, then one line per row.

    Without ORDER BY the row lines are sorted bytewise so the string is a
    stable fingerprint of the row multiset; with ORDER BY producer order
    is preserved.
    """
    header = "|".join(rs.columns)
    lines = ["|".join(render_value(v) for v in row) for row in rs.rows]
    if not rs.ordered_flag:
        lines.sort()
    return "\n".join([header] + lines)
