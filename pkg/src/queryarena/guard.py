"""Query policy enforcement and answer grading.

Two grading paths: exact string comparison after normalization, and the
shadow-table blind test, where a candidate SELECT runs against a hidden
copy of the question's table (same structure, different data) and only the
serialized result is compared. Fabricating output from the displayed guide
data therefore cannot pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .sql import (
    Database,
    MultiStatementError,
    ParseError,
    Statement,
    StatementClass,
    TableState,
    classify,
    execute,
    make_table,
    parse,
    serialize_result,
)
from .sql.database import ResultSet
from .sql.errors import ExecError
from .sql.parser import parse as _parse
from .sql.statements import ColumnDef, ColumnType, Select


class PolicyMode(Enum):
    PRACTICE = "PRACTICE"
    SHADOW_GRADE = "SHADOW_GRADE"
    EXACT_GRADE = "EXACT_GRADE"


_ALL_CLASSES = frozenset(StatementClass)

ALLOWED_CLASSES: dict[PolicyMode, frozenset[StatementClass]] = {
    PolicyMode.PRACTICE: frozenset({
        StatementClass.SELECT,
        StatementClass.INSERT,
        StatementClass.UPDATE,
        StatementClass.DELETE,
        StatementClass.ALTER,
        StatementClass.TRUNCATE,
        StatementClass.DESCRIBE,
    }),
    PolicyMode.SHADOW_GRADE: frozenset({StatementClass.SELECT}),
    # exact grading never executes, so its policy only requires parseability
    PolicyMode.EXACT_GRADE: _ALL_CLASSES,
}


class RejectReason(Enum):
    PARSE = "PARSE"
    MULTI_STATEMENT = "MULTI_STATEMENT"
    FORBIDDEN_CLASS = "FORBIDDEN_CLASS"
    FOREIGN_TABLE = "FOREIGN_TABLE"


class QueryRejected(Exception):
    def __init__(self, reason: RejectReason, detail: str):
        super().__init__(f"{reason.value}: {detail}")
        self.reason = reason
        self.detail = detail


def sanitize(text: str, mode: PolicyMode, sandbox_table: str | None = None) -> Statement:
    """Parse and policy-check a submission; returns the statement or raises QueryRejected.

    Decisions are token-level: an identifier like "created_at" or a string
    literal containing DROP never triggers a rejection, only the actual
    statement class does.
    """
    if mode is PolicyMode.PRACTICE and sandbox_table is None:
        raise ValueError("practice mode requires the caller's sandbox table")
    try:
        stmt = parse(text)
    except MultiStatementError as exc:
        raise QueryRejected(RejectReason.MULTI_STATEMENT, str(exc)) from exc
    except ParseError as exc:
        raise QueryRejected(RejectReason.PARSE, str(exc)) from exc
    cls = classify(stmt)
    if cls not in ALLOWED_CLASSES[mode]:
        raise QueryRejected(
            RejectReason.FORBIDDEN_CLASS,
            f"{cls.value} statements are not allowed in {mode.value}",
        )
    if mode is PolicyMode.PRACTICE:
        target = stmt.target_table
        # a FROM-less SELECT touches no table and is harmless
        if target is not None and target != sandbox_table:
            raise QueryRejected(
                RejectReason.FOREIGN_TABLE,
                f"table {target!r} is not your sandbox table",
            )
    return stmt


def normalize(text: str) -> str:
    """Comparison normal form: outer whitespace trimmed, one trailing ";"
    dropped, whitespace runs collapsed, case folded outside string literals."""
    text = text.strip()
    if text.endswith(";"):
        text = text[:-1].rstrip()
    out: list[str] = []
    in_string = False
    pending_space = False
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if in_string:
            out.append(ch)
            if ch == "'":
                if i + 1 < n and text[i + 1] == "'":
                    out.append("'")
                    i += 2
                    continue
                in_string = False
            i += 1
            continue
        if ch.isspace():
            pending_space = True
            i += 1
            continue
        if pending_space:
            out.append(" ")
            pending_space = False
        if ch == "'":
            in_string = True
            out.append(ch)
        else:
            out.append(ch.lower())
        i += 1
    return "".join(out)


class GradingMode(Enum):
    EXACT = "EXACT"
    SHADOW = "SHADOW"


class VerdictReason(Enum):
    MATCHED = "MATCHED"
    RESULT_MATCH = "RESULT_MATCH"
    RESULT_MISMATCH = "RESULT_MISMATCH"
    POLICY_REJECTED = "POLICY_REJECTED"
    PARSE_FAILED = "PARSE_FAILED"
    EXEC_FAILED = "EXEC_FAILED"


@dataclass(frozen=True)
class Verdict:
    correct: bool
    reason: VerdictReason
    detail: str = ""


@dataclass(frozen=True)
class ShadowFixture:
    """Hidden grading table: bound under the visible name during grading,
    stored under a distinct physical name."""

    visible_name: str
    table: TableState


@dataclass(frozen=True)
class Question:
    id: int
    text: str
    difficulty: int  # 1..3
    category: StatementClass
    grading_mode: GradingMode
    stored_answers: tuple[str, ...]  # answers (EXACT) or reference queries (SHADOW)
    guides: tuple[dict, ...] = ()
    shadow_fixture: ShadowFixture | None = None
    cached_reference_strings: tuple[str, ...] = ()
    compare_ordered: bool = False


class InvalidQuestion(Exception):
    pass


def grade(question: Question, candidate: str) -> Verdict:
    if question.grading_mode is GradingMode.EXACT:
        return grade_exact(question, candidate)
    return grade_shadow(question, candidate)


def grade_exact(question: Question, candidate: str) -> Verdict:
    """Correct iff the normalized candidate equals any normalized stored answer."""
    norm = normalize(candidate)
    for answer in question.stored_answers:
        if norm == normalize(answer):
            return Verdict(True, VerdictReason.MATCHED)
    return Verdict(False, VerdictReason.RESULT_MISMATCH, "no stored answer matched")


def grade_shadow(question: Question, candidate: str) -> Verdict:
    """Blind test: execute the candidate on the shadow table and compare
    canonical serializations. Never raises; failures become incorrect verdicts."""
    fixture = question.shadow_fixture
    assert fixture is not None, "shadow question without fixture"
    try:
        stmt = sanitize(candidate, PolicyMode.SHADOW_GRADE)
    except QueryRejected as exc:
        if exc.reason is RejectReason.PARSE:
            return Verdict(False, VerdictReason.PARSE_FAILED, exc.detail)
        return Verdict(False, VerdictReason.POLICY_REJECTED, exc.detail)
    db = Database()
    db.bind_copy(fixture.table, as_name=fixture.visible_name)
    try:
        outcome = execute(db, stmt)
    except ExecError as exc:
        return Verdict(False, VerdictReason.EXEC_FAILED, str(exc))
    assert outcome.result is not None  # SELECT always yields rows
    candidate_string = _comparison_string(outcome.result, question.compare_ordered)
    if candidate_string in question.cached_reference_strings:
        return Verdict(True, VerdictReason.RESULT_MATCH)
    return Verdict(False, VerdictReason.RESULT_MISMATCH, "result differs from the expected rows")


def _comparison_string(rs: ResultSet, compare_ordered: bool) -> str:
    forced = ResultSet(rs.columns, rs.rows, ordered_flag=compare_ordered)
    return serialize_result(forced)


# --- question ingest ---

def parse_column_type(text: str) -> ColumnType:
    """Parse a rendered column type like "VARCHAR(50)" back to its value."""
    probe = _parse(f"CREATE TABLE __t (__c {text})")
    return probe.columns[0].ctype  # type: ignore[union-attr]


def ingest_question(spec: dict[str, Any]) -> Question:
    """Validate a raw question spec and precompute shadow reference strings.

    Raises InvalidQuestion on empty answers, unparseable references, or
    references that disagree with each other on the fixture.
    """
    try:
        qid = int(spec["id"])
        text = str(spec["text"])
        difficulty = int(spec["difficulty"])
        category = StatementClass(spec["category"])
        grading_mode = GradingMode(spec["grading_mode"])
        stored_answers = tuple(str(a) for a in spec["stored_answers"])
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidQuestion(f"bad question spec: {exc}") from exc
    if difficulty not in (1, 2, 3):
        raise InvalidQuestion(f"difficulty must be 1..3, got {difficulty}")
    if not stored_answers:
        raise InvalidQuestion("a question needs at least one stored answer")
    guides = tuple(dict(g) for g in spec.get("guides", ()))

    if grading_mode is GradingMode.EXACT:
        return Question(qid, text, difficulty, category, grading_mode, stored_answers, guides)

    raw_fixture = spec.get("shadow_fixture")
    if not raw_fixture:
        raise InvalidQuestion("shadow-graded questions need a shadow_fixture")
    fixture = _build_fixture(qid, raw_fixture)

    statements: list[Select] = []
    for reference in stored_answers:
        try:
            stmt = sanitize(reference, PolicyMode.SHADOW_GRADE)
        except QueryRejected as exc:
            raise InvalidQuestion(f"reference query rejected: {exc}") from exc
        assert isinstance(stmt, Select)
        statements.append(stmt)

    ordered_flags = {bool(s.order_by) for s in statements}
    if len(ordered_flags) > 1:
        raise InvalidQuestion("reference queries disagree on ORDER BY usage")
    compare_ordered = ordered_flags.pop()

    cached: list[str] = []
    for reference, stmt in zip(stored_answers, statements):
        db = Database()
        db.bind_copy(fixture.table, as_name=fixture.visible_name)
        try:
            outcome = execute(db, stmt)
        except ExecError as exc:
            raise InvalidQuestion(f"reference query failed on the fixture: {exc}") from exc
        assert outcome.result is not None
        cached.append(_comparison_string(outcome.result, compare_ordered))
    if len(set(cached)) != 1:
        raise InvalidQuestion("reference queries disagree on the fixture")

    return Question(
        qid, text, difficulty, category, grading_mode, stored_answers, guides,
        shadow_fixture=fixture,
        cached_reference_strings=tuple(cached),
        compare_ordered=compare_ordered,
    )


def _build_fixture(qid: int, raw: dict[str, Any]) -> ShadowFixture:
    try:
        visible_name = str(raw["visible_name"]).lower()
        columns = [
            ColumnDef(
                str(c["name"]).lower(),
                parse_column_type(str(c["type"])),
                bool(c.get("nullable", True)),
            )
            for c in raw["columns"]
        ]
        rows = [tuple(v for v in row) for row in raw["rows"]]
    except (KeyError, ValueError, TypeError, ParseError) as exc:
        raise InvalidQuestion(f"bad shadow fixture: {exc}") from exc
    try:
        table = make_table(f"shadow_{qid}_{visible_name}", columns, rows)
    except ExecError as exc:
        raise InvalidQuestion(f"bad shadow fixture: {exc}") from exc
    return ShadowFixture(visible_name, table)


def question_to_spec(q: Question) -> dict[str, Any]:
    """Inverse of ingest_question, used by the question bank file format."""
    spec: dict[str, Any] = {
        "id": q.id,
        "text": q.text,
        "difficulty": q.difficulty,
        "category": q.category.value,
        "grading_mode": q.grading_mode.value,
        "stored_answers": list(q.stored_answers),
        "guides": [dict(g) for g in q.guides],
    }
    if q.shadow_fixture is not None:
        spec["shadow_fixture"] = {
            "visible_name": q.shadow_fixture.visible_name,
            "columns": [
                {"name": c.name, "type": c.ctype.render(), "nullable": c.nullable}
                for c in q.shadow_fixture.table.columns
            ],
            "rows": [list(row) for row in q.shadow_fixture.table.rows],
        }
    return spec
