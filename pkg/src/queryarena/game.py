"""Solo drills and practice sandboxes.

A solo session draws questions from the bank (10 for casual, a chosen
count and difficulty for custom), lets the player answer, skip and revise
freely, then grades everything at once and reports strengths per command
category. Practice gives each player a private sandbox table they can
freely query and restructure under the practice policy.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import guard
from .guard import PolicyMode, Question, Verdict, VerdictReason
from .sql import ColumnDef, ColumnType, Database, ExecOutcome, TableState, execute, make_table
from .sql.statements import StatementClass, varchar


class GameError(Exception):
    pass


class InsufficientBank(GameError):
    pass


class AlreadySubmitted(GameError):
    pass


class IndexOutOfRange(GameError):
    pass


@dataclass(frozen=True)
class SoloConfig:
    kind: str  # CASUAL | CUSTOM
    count: int = 10
    difficulty: int | None = None  # CUSTOM only

    CASUAL_COUNT = 10
    MAX_CUSTOM_COUNT = 50

    def validate(self) -> None:
        if self.kind == "CASUAL":
            return
        if self.kind != "CUSTOM":
            raise GameError(f"unknown solo mode {self.kind!r}")
        if not 1 <= self.count <= self.MAX_CUSTOM_COUNT:
            raise GameError(f"custom count must be 1..{self.MAX_CUSTOM_COUNT}")
        if self.difficulty not in (1, 2, 3):
            raise GameError("custom difficulty must be 1..3")


def draw_questions(
    bank: Sequence[Question], config: SoloConfig, rng_seed: int
) -> list[Question]:
    """Uniform draw without replacement from the eligible pool, reproducible by seed."""
    config.validate()
    if config.kind == "CASUAL":
        pool = sorted(bank, key=lambda q: q.id)
        count = SoloConfig.CASUAL_COUNT
    else:
        pool = sorted((q for q in bank if q.difficulty == config.difficulty), key=lambda q: q.id)
        count = config.count
    if len(pool) < count:
        raise InsufficientBank(
            f"need {count} eligible questions, bank has {len(pool)}"
        )
    return random.Random(rng_seed).sample(pool, count)


UNANSWERED = "unanswered"
SKIPPED = "skipped"
ANSWERED = "answered"


@dataclass
class AnswerSlot:
    state: str = UNANSWERED
    text: str | None = None


@dataclass
class SoloSession:
    id: str
    player: str
    config: SoloConfig
    questions: list[Question]
    slots: list[AnswerSlot] = field(default_factory=list)
    submitted: bool = False
    started_at: float = field(default_factory=time.time)
    submitted_at: float | None = None

    def __post_init__(self) -> None:
        if not self.slots:
            self.slots = [AnswerSlot() for _ in self.questions]

    def _slot(self, index: int) -> AnswerSlot:
        if self.submitted:
            raise AlreadySubmitted("session already submitted")
        if not 0 <= index < len(self.questions):
            raise IndexOutOfRange(f"question index {index} out of range")
        return self.slots[index]

    def answer(self, index: int, text: str) -> None:
        """Record an answer; overwrites a prior answer or skip."""
        slot = self._slot(index)
        slot.state = ANSWERED
        slot.text = text

    def skip(self, index: int) -> None:
        """Mark the question skipped; it can still be answered before submit."""
        slot = self._slot(index)
        slot.state = SKIPPED
        slot.text = None


@dataclass
class CategoryStat:
    attempted: int = 0
    correct: int = 0


@dataclass
class ScoreReport:
    total_correct: int
    verdicts: list[Verdict]
    category_stats: dict[StatementClass, CategoryStat]


def submit_all(
    session: SoloSession,
    on_record: Callable[[SoloSession, ScoreReport], None] | None = None,
) -> ScoreReport:
    """Grade every question, freeze the session, and hand the report to on_record.

    Skipped and unanswered questions count as attempted and incorrect, so
    the per-category stats reflect what the player still needs to work on.
    """
    if session.submitted:
        raise AlreadySubmitted("session already submitted")
    verdicts: list[Verdict] = []
    stats: dict[StatementClass, CategoryStat] = {}
    total = 0
    for question, slot in zip(session.questions, session.slots):
        if slot.state == ANSWERED:
            assert slot.text is not None
            verdict = guard.grade(question, slot.text)
        else:
            verdict = Verdict(False, VerdictReason.RESULT_MISMATCH, slot.state)
        verdicts.append(verdict)
        stat = stats.setdefault(question.category, CategoryStat())
        stat.attempted += 1
        if verdict.correct:
            stat.correct += 1
            total += 1
    session.submitted = True
    session.submitted_at = time.time()
    report = ScoreReport(total, verdicts, stats)
    if on_record is not None:
        on_record(session, report)
    return report


# --- practice sandboxes ---

SANDBOX_COLUMNS = [
    ColumnDef("id", ColumnType("INT"), nullable=False),
    ColumnDef("name", varchar(50)),
    ColumnDef("created", ColumnType("DATE")),
]

SANDBOX_SEED_ROWS = [
    (1, "sample alpha", "2024-01-05"),
    (2, "sample bravo", "2024-02-10"),
    (3, "sample charlie", "2024-03-15"),
]


def sandbox_table_name(username: str) -> str:
    return f"{username.lower()}_table"


class PracticeSandboxes:
    """Per-player sandbox databases, keyed by username."""

    def __init__(self) -> None:
        self._databases: dict[str, Database] = {}

    def provision(self, username: str) -> TableState:
        """Create (or reset to) the default sandbox table; idempotent."""
        name = sandbox_table_name(username)
        db = Database()
        db.add_table(make_table(name, SANDBOX_COLUMNS, list(SANDBOX_SEED_ROWS)))
        self._databases[username] = db
        return db.get(name)

    def exists(self, username: str) -> bool:
        return username in self._databases

    def get_table(self, username: str) -> TableState:
        db = self._databases[username]
        return db.get(sandbox_table_name(username))

    def run(self, username: str, text: str) -> ExecOutcome:
        """Sanitize under the practice policy and execute on the caller's sandbox.

        Raises QueryRejected on policy violations and ExecError on runtime
        failures; callers surface both as structured rejections.
        """
        if username not in self._databases:
            raise GameError(f"no sandbox provisioned for {username!r}")
        stmt = guard.sanitize(text, PolicyMode.PRACTICE, sandbox_table_name(username))
        return execute(self._databases[username], stmt)
