"""Accounts, verification codes, ratings, lectures, game records and the
question bank, all behind one single-writer registry with file-backed state.

Mutations validate, apply in memory, then append to the operation log;
restore replays the snapshot plus log tail through the same apply paths,
so the durable state model is exactly the in-memory one.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .guard import InvalidQuestion, Question, ingest_question, question_to_spec
from .storage import LogStore

CODE_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ23456789"
CODE_LENGTH = 8
CODE_TTL_SECONDS = 7 * 24 * 3600
MIN_PASSWORD_LENGTH = 8
PAGE_SIZE = 25
ELO_K = 32
SEARCH_LIMIT = 50
PBKDF2_ITERATIONS = 60_000


class GameMode(Enum):
    SOLO_CASUAL = "SOLO_CASUAL"
    SOLO_CUSTOM = "SOLO_CUSTOM"
    MP_CASUAL = "MP_CASUAL"
    MP_COMPETITION = "MP_COMPETITION"


class Role(Enum):
    STUDENT = "STUDENT"
    ADMIN = "ADMIN"


class RegistryError(Exception):
    pass


class NotAdmin(RegistryError):
    pass


class BadCode(RegistryError):
    pass


class UsernameTaken(RegistryError):
    pass


class WeakPassword(RegistryError):
    pass


class UnknownUser(RegistryError):
    pass


class InvalidMode(RegistryError):
    pass


class UnknownQuestionId(RegistryError):
    pass


class UnknownLecture(RegistryError):
    pass


class InvalidLecture(RegistryError):
    pass


@dataclass
class Account:
    username: str
    password_digest: str
    role: Role
    name: str = ""
    program: str = ""
    created_at: float = 0.0


@dataclass
class VerificationCode:
    code: str
    issued_by: str
    expires_at: float
    consumed_by: str | None = None


@dataclass
class Rating:
    rating: int
    wins: int = 0
    losses: int = 0
    games_played: int = 0


@dataclass
class GameRecord:
    player: str
    mode: GameMode
    at: float
    payload: dict[str, Any] = field(default_factory=dict)


LECTURE_BLOCK_KINDS = {"TEXT", "IMAGE", "AUDIO", "VIDEO_EMBED"}


@dataclass
class LectureEntry:
    id: int
    title: str
    mode: str  # LECTURE | TUTORIAL
    blocks: list[dict[str, Any]]


def hash_password(password: str, salt: str | None = None) -> str:
    salt = salt or secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(salt), PBKDF2_ITERATIONS
    ).hex()
    return f"pbkdf2_sha256${PBKDF2_ITERATIONS}${salt}${digest}"


def verify_password(password: str, stored: str) -> bool:
    try:
        _, iterations, salt, digest = stored.split("$")
    except ValueError:
        return False
    probe = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(salt), int(iterations)
    ).hex()
    return secrets.compare_digest(probe, digest)


def elo_delta(winner_rating: int, loser_rating: int) -> int:
    """Points transferred for one decided match (K=32)."""
    expected = 1.0 / (1.0 + 10 ** ((loser_rating - winner_rating) / 400.0))
    return round(ELO_K * (1.0 - expected))


def default_rating(mode: GameMode) -> int:
    # head-to-head modes start at the Elo baseline; solo modes accumulate
    # points from zero since there is no opponent
    if mode in (GameMode.MP_CASUAL, GameMode.MP_COMPETITION):
        return 1000
    return 0


class Registry:
    """Single-writer domain state. All mutations are serialized on one lock."""

    def __init__(
        self,
        store: LogStore | None = None,
        *,
        now: Callable[[], float] = time.time,
        snapshot_every: int = 200,
    ):
        self._lock = threading.RLock()
        self._store = store
        self._now = now
        self._snapshot_every = snapshot_every
        self._ops_since_snapshot = 0
        self.accounts: dict[str, Account] = {}
        self.codes: dict[str, VerificationCode] = {}
        self.ratings: dict[str, dict[str, Rating]] = {}  # username -> mode -> Rating
        self.records: list[GameRecord] = []
        self.lectures: dict[int, LectureEntry] = {}
        self.bank: dict[int, Question] = {}
        self.pending_deletes: set[int] = set()
        self.next_lecture_id = 1
        self.on_student_registered: Callable[[str], None] | None = None

    # --- persistence ---

    @classmethod
    def open(cls, store: LogStore, **kwargs: Any) -> "Registry":
        registry = cls(store, **kwargs)
        for spec in store.load_questions():
            question = ingest_question(spec)
            registry.bank[question.id] = question
        state, records = store.load()
        if state is not None:
            registry._load_state(state)
        for op, data in records:
            registry._apply(op, data)
        return registry

    def _log(self, op: str, data: dict[str, Any]) -> None:
        if self._store is None:
            return
        self._store.append(op, data)
        self._ops_since_snapshot += 1
        if self._ops_since_snapshot >= self._snapshot_every:
            self.snapshot()

    def snapshot(self) -> None:
        if self._store is None:
            return
        self._store.write_snapshot(self.state_dict())
        self._ops_since_snapshot = 0

    def _persist_bank(self) -> None:
        if self._store is None:
            return
        specs = [question_to_spec(q) for _, q in sorted(self.bank.items())]
        self._store.write_questions(specs)

    def state_dict(self) -> dict[str, Any]:
        """Canonical JSON form of everything except the question bank file."""
        return {
            "accounts": [
                {
                    "username": a.username,
                    "password_digest": a.password_digest,
                    "role": a.role.value,
                    "name": a.name,
                    "program": a.program,
                    "created_at": a.created_at,
                }
                for a in sorted(self.accounts.values(), key=lambda a: a.username)
            ],
            "codes": [
                {
                    "code": c.code,
                    "issued_by": c.issued_by,
                    "expires_at": c.expires_at,
                    "consumed_by": c.consumed_by,
                }
                for c in sorted(self.codes.values(), key=lambda c: c.code)
            ],
            "ratings": [
                {"username": username, "mode": mode, "rating": r.rating,
                 "wins": r.wins, "losses": r.losses, "games_played": r.games_played}
                for username, modes in sorted(self.ratings.items())
                for mode, r in sorted(modes.items())
            ],
            "records": [
                {"player": r.player, "mode": r.mode.value, "at": r.at, "payload": r.payload}
                for r in self.records
            ],
            "lectures": [
                {"id": e.id, "title": e.title, "mode": e.mode, "blocks": e.blocks}
                for _, e in sorted(self.lectures.items())
            ],
            "pending_deletes": sorted(self.pending_deletes),
            "next_lecture_id": self.next_lecture_id,
        }

    def _load_state(self, state: dict[str, Any]) -> None:
        for a in state.get("accounts", []):
            self.accounts[a["username"]] = Account(
                a["username"], a["password_digest"], Role(a["role"]),
                a.get("name", ""), a.get("program", ""), a.get("created_at", 0.0),
            )
        for c in state.get("codes", []):
            self.codes[c["code"]] = VerificationCode(
                c["code"], c["issued_by"], c["expires_at"], c.get("consumed_by"),
            )
        for r in state.get("ratings", []):
            self.ratings.setdefault(r["username"], {})[r["mode"]] = Rating(
                r["rating"], r["wins"], r["losses"], r["games_played"],
            )
        for r in state.get("records", []):
            self.records.append(GameRecord(r["player"], GameMode(r["mode"]), r["at"], r["payload"]))
        for e in state.get("lectures", []):
            self.lectures[e["id"]] = LectureEntry(e["id"], e["title"], e["mode"], e["blocks"])
        self.pending_deletes = set(state.get("pending_deletes", []))
        self.next_lecture_id = state.get("next_lecture_id", 1)

    # --- replayable apply paths ---

    def _apply(self, op: str, data: dict[str, Any]) -> None:
        if op == "account_created":
            account = Account(
                data["username"], data["digest"], Role(data["role"]),
                data.get("name", ""), data.get("program", ""), data["created_at"],
            )
            self.accounts[account.username] = account
            code = data.get("code")
            if code:
                self.codes[code].consumed_by = account.username
        elif op == "code_issued":
            self.codes[data["code"]] = VerificationCode(
                data["code"], data["issued_by"], data["expires_at"],
            )
        elif op == "match_rated":
            self._apply_match_rating(GameMode(data["mode"]), data["winner"], data["loser"])
        elif op == "solo_scored":
            rating = self._rating_for(data["username"], GameMode(data["mode"]))
            rating.rating += int(data["points"])
            rating.games_played += 1
        elif op == "game_recorded":
            self.records.append(
                GameRecord(data["player"], GameMode(data["mode"]), data["at"], data["payload"])
            )
        elif op == "lecture_put":
            entry = LectureEntry(
                data["id"], data["title"], data["mode"], data["blocks"],
            )
            self.lectures[entry.id] = entry
            self.next_lecture_id = max(self.next_lecture_id, entry.id + 1)
        elif op == "question_delete_pending":
            self.pending_deletes.add(int(data["id"]))
        elif op == "question_delete_settled":
            self.pending_deletes.discard(int(data["id"]))
        else:
            raise RegistryError(f"unknown log op {op!r}")

    def _rating_for(self, username: str, mode: GameMode) -> Rating:
        modes = self.ratings.setdefault(username, {})
        if mode.value not in modes:
            modes[mode.value] = Rating(default_rating(mode))
        return modes[mode.value]

    def _apply_match_rating(self, mode: GameMode, winner: str, loser: str) -> None:
        w = self._rating_for(winner, mode)
        l = self._rating_for(loser, mode)
        delta = elo_delta(w.rating, l.rating)
        w.rating += delta
        l.rating = max(0, l.rating - delta)
        w.wins += 1
        w.games_played += 1
        l.losses += 1
        l.games_played += 1

    # --- accounts ---

    def create_admin(self, username: str, password: str, name: str = "", program: str = "") -> Account:
        with self._lock:
            self._check_new_credentials(username, password)
            data = {
                "username": username, "digest": hash_password(password),
                "role": Role.ADMIN.value, "name": name, "program": program,
                "created_at": self._now(), "code": None,
            }
            self._apply("account_created", data)
            self._log("account_created", data)
            return self.accounts[username]

    def issue_verification_code(self, caller: str) -> VerificationCode:
        """Mint a single-use registration code (admin only, 7-day expiry)."""
        with self._lock:
            self._require_admin(caller)
            while True:
                code = "".join(secrets.choice(CODE_ALPHABET) for _ in range(CODE_LENGTH))
                if code not in self.codes:
                    break
            data = {"code": code, "issued_by": caller, "expires_at": self._now() + CODE_TTL_SECONDS}
            self._apply("code_issued", data)
            self._log("code_issued", data)
            return self.codes[code]

    def register_student(
        self, username: str, password: str, code: str, name: str = "", program: str = ""
    ) -> Account:
        """Create a student account by consuming a verification code atomically."""
        with self._lock:
            self._check_new_credentials(username, password)
            entry = self.codes.get(code)
            if entry is None or entry.consumed_by is not None:
                raise BadCode("verification code is invalid or already used")
            if self._now() > entry.expires_at:
                raise BadCode("verification code expired")
            data = {
                "username": username, "digest": hash_password(password),
                "role": Role.STUDENT.value, "name": name, "program": program,
                "created_at": self._now(), "code": code,
            }
            self._apply("account_created", data)
            self._log("account_created", data)
        if self.on_student_registered is not None:
            self.on_student_registered(username)
        return self.accounts[username]

    def _check_new_credentials(self, username: str, password: str) -> None:
        if not username or not username.replace("_", "").isalnum():
            raise RegistryError("usernames are letters, digits and underscores")
        if username.lower() in (u.lower() for u in self.accounts):
            raise UsernameTaken(f"username {username!r} is taken")
        if len(password) < MIN_PASSWORD_LENGTH:
            raise WeakPassword(f"passwords need at least {MIN_PASSWORD_LENGTH} characters")

    def _require_admin(self, caller: str) -> Account:
        account = self.accounts.get(caller)
        if account is None or account.role is not Role.ADMIN:
            raise NotAdmin("administrator role required")
        return account

    def authenticate(self, username: str, password: str) -> Account | None:
        account = self.accounts.get(username)
        if account is None or not verify_password(password, account.password_digest):
            return None
        return account

    def get_account(self, username: str) -> Account:
        account = self.accounts.get(username)
        if account is None:
            raise UnknownUser(f"no account {username!r}")
        return account

    # --- profiles ---

    def search_profiles(self, query: str) -> list[dict[str, Any]]:
        """Case-insensitive substring search over username and display name."""
        needle = query.lower()
        hits = [
            a for a in self.accounts.values()
            if needle in a.username.lower() or needle in a.name.lower()
        ]
        hits.sort(key=lambda a: a.username)
        return [
            {"username": a.username, "name": a.name, "program": a.program}
            for a in hits[:SEARCH_LIMIT]
        ]

    def profile(self, username: str) -> dict[str, Any]:
        account = self.get_account(username)
        ratings = {
            mode.value: self.rating(username, mode).__dict__.copy()
            for mode in GameMode
        }
        records = [
            {"mode": r.mode.value, "at": r.at, "payload": r.payload}
            for r in self.records
            if r.player == username
        ][-50:]
        return {
            "username": account.username,
            "name": account.name,
            "program": account.program,
            "role": account.role.value,
            "created_at": account.created_at,
            "ratings": ratings,
            "records": records,
        }

    # --- ratings and leaderboards ---

    def rating(self, username: str, mode: GameMode) -> Rating:
        existing = self.ratings.get(username, {}).get(mode.value)
        return existing if existing is not None else Rating(default_rating(mode))

    def update_rating(self, mode: GameMode, winner: str, loser: str) -> tuple[Rating, Rating]:
        """Elo update for one decided match; returns the new (winner, loser) ratings."""
        with self._lock:
            data = {"mode": mode.value, "winner": winner, "loser": loser}
            self._apply("match_rated", data)
            self._log("match_rated", data)
            return self.rating(winner, mode), self.rating(loser, mode)

    def add_solo_points(self, username: str, mode: GameMode, points: int) -> Rating:
        with self._lock:
            data = {"username": username, "mode": mode.value, "points": points}
            self._apply("solo_scored", data)
            self._log("solo_scored", data)
            return self.rating(username, mode)

    def record_game(self, player: str, mode: GameMode, payload: dict[str, Any]) -> None:
        with self._lock:
            data = {"player": player, "mode": mode.value, "at": self._now(), "payload": payload}
            self._apply("game_recorded", data)
            self._log("game_recorded", data)

    def leaderboard(self, mode: GameMode | str, page: int = 1) -> list[dict[str, Any]]:
        """Descending by rating; ties go to the older account. 25 entries a page."""
        if isinstance(mode, str):
            try:
                mode = GameMode(mode)
            except ValueError:
                raise InvalidMode(f"unknown game mode {mode!r}") from None
        rated = [
            (username, modes[mode.value])
            for username, modes in self.ratings.items()
            if mode.value in modes
        ]
        rated.sort(key=lambda item: (
            -item[1].rating,
            self.accounts[item[0]].created_at if item[0] in self.accounts else 0.0,
            item[0],
        ))
        start = (max(page, 1) - 1) * PAGE_SIZE
        return [
            {
                "rank": start + i + 1,
                "username": username,
                "rating": r.rating,
                "wins": r.wins,
                "losses": r.losses,
                "games_played": r.games_played,
            }
            for i, (username, r) in enumerate(rated[start:start + PAGE_SIZE])
        ]

    # --- question panel ---

    def list_questions(self) -> list[Question]:
        return [q for _, q in sorted(self.bank.items())]

    def add_question(self, caller: str, spec: dict[str, Any]) -> Question:
        with self._lock:
            self._require_admin(caller)
            question = ingest_question(spec)
            if question.id in self.bank:
                raise InvalidQuestion(f"question id {question.id} already exists")
            self.bank[question.id] = question
            self._persist_bank()
            return question

    def edit_question(self, caller: str, question_id: int, spec: dict[str, Any]) -> Question:
        with self._lock:
            self._require_admin(caller)
            if question_id not in self.bank:
                raise UnknownQuestionId(f"no question {question_id}")
            spec = dict(spec, id=question_id)
            question = ingest_question(spec)
            self.bank[question_id] = question
            self._persist_bank()
            return question

    def delete_question(self, caller: str, question_id: int, in_use: set[int] | None = None) -> bool:
        """Remove a question; deletion is deferred while a session still uses it.

        Returns True when removed now, False when deferred.
        """
        with self._lock:
            self._require_admin(caller)
            if question_id not in self.bank:
                raise UnknownQuestionId(f"no question {question_id}")
            if in_use and question_id in in_use:
                data = {"id": question_id}
                self._apply("question_delete_pending", data)
                self._log("question_delete_pending", data)
                return False
            del self.bank[question_id]
            self._persist_bank()
            return True

    def flush_deferred_deletes(self, in_use: set[int]) -> list[int]:
        """Apply deferred deletions whose sessions have ended."""
        with self._lock:
            freed = [qid for qid in sorted(self.pending_deletes) if qid not in in_use]
            for qid in freed:
                self.bank.pop(qid, None)
                data = {"id": qid}
                self._apply("question_delete_settled", data)
                self._log("question_delete_settled", data)
            if freed:
                self._persist_bank()
            return freed

    def seed_bank(self, questions: list[Question]) -> None:
        """Install an initial bank (bootstrap only)."""
        with self._lock:
            for q in questions:
                self.bank[q.id] = q
            self._persist_bank()

    # --- lectures ---

    def list_lectures(self) -> list[LectureEntry]:
        return [e for _, e in sorted(self.lectures.items())]

    def get_lecture(self, lecture_id: int) -> LectureEntry:
        entry = self.lectures.get(lecture_id)
        if entry is None:
            raise UnknownLecture(f"no lecture {lecture_id}")
        return entry

    def put_lecture(self, caller: str, payload: dict[str, Any], lecture_id: int | None = None) -> LectureEntry:
        with self._lock:
            self._require_admin(caller)
            if lecture_id is not None and lecture_id not in self.lectures:
                raise UnknownLecture(f"no lecture {lecture_id}")
            entry_id = lecture_id if lecture_id is not None else self.next_lecture_id
            entry = self._validate_lecture(entry_id, payload)
            data = {"id": entry.id, "title": entry.title, "mode": entry.mode, "blocks": entry.blocks}
            self._apply("lecture_put", data)
            self._log("lecture_put", data)
            return entry

    @staticmethod
    def _validate_lecture(entry_id: int, payload: dict[str, Any]) -> LectureEntry:
        title = str(payload.get("title", "")).strip()
        mode = str(payload.get("mode", "LECTURE"))
        blocks = payload.get("blocks") or []
        if not title:
            raise InvalidLecture("a lecture needs a title")
        if mode not in ("LECTURE", "TUTORIAL"):
            raise InvalidLecture("mode must be LECTURE or TUTORIAL")
        if not blocks:
            raise InvalidLecture("a lecture needs at least one content block")
        cleaned = []
        for block in blocks:
            kind = str(block.get("kind", ""))
            if kind not in LECTURE_BLOCK_KINDS:
                raise InvalidLecture(f"unknown block kind {kind!r}")
            if kind == "TEXT":
                item: dict[str, Any] = {"kind": kind, "text": str(block.get("text", ""))}
            else:
                # media blocks carry a URL and nothing else
                item = {"kind": kind, "url": str(block.get("url", ""))}
                if not item["url"]:
                    raise InvalidLecture(f"{kind} blocks need a url")
            demo = block.get("demo")
            if demo is not None:
                if mode != "TUTORIAL":
                    raise InvalidLecture("demo walkthroughs belong to tutorial entries")
                item["demo"] = {
                    "query": str(demo.get("query", "")),
                    "transcript": str(demo.get("transcript", "")),
                }
            cleaned.append(item)
        return LectureEntry(entry_id, title, mode, cleaned)
