"""HTTP and WebSocket gateway.

HTTP carries request/response features (auth, lectures, profiles,
rankings, solo play, practice, the admin panel); each room gets a
WebSocket stream whose messages are stamped with a per-room monotone
sequence number. Client SQL only ever reaches an engine through
guard.sanitize, either inside grading or via the practice policy.
"""

from __future__ import annotations

import asyncio
import secrets
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from fastapi import Depends, FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field
from starlette.middleware.base import BaseHTTPMiddleware

from . import game, guard
from .arena import Room, RoomConfig, RoomState
from .arena.rooms import InvalidConfig, OutMessage
from .game import GameError, PracticeSandboxes, SoloConfig, SoloSession
from .guard import InvalidQuestion, QueryRejected
from .registry import (
    Account,
    BadCode,
    GameMode,
    InvalidLecture,
    InvalidMode,
    NotAdmin,
    Registry,
    RegistryError,
    Role,
    UnknownLecture,
    UnknownQuestionId,
    UnknownUser,
    UsernameTaken,
    WeakPassword,
)
from .sql.errors import ExecError

TOKEN_TTL_SECONDS = 24 * 3600
WS_MESSAGES_PER_SECOND = 10

CLOSE_BAD_TOKEN = 4001
CLOSE_UNKNOWN_ROOM = 4004
CLOSE_PROTOCOL_VIOLATION = 4009


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class TokenStore:
    """Opaque random session tokens with a 24 hour lifetime."""

    def __init__(self, now: Callable[[], float] = time.time):
        self._now = now
        self._tokens: dict[str, tuple[str, float]] = {}

    def issue(self, username: str) -> str:
        token = secrets.token_hex(32)
        self._tokens[token] = (username, self._now() + TOKEN_TTL_SECONDS)
        return token

    def resolve(self, token: str) -> str | None:
        entry = self._tokens.get(token)
        if entry is None:
            return None
        username, expires_at = entry
        if self._now() > expires_at:
            del self._tokens[token]
            return None
        return username


@dataclass
class RoomHub:
    """Connections and outbound sequencing for one room."""

    room: Room
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    wire_seq: int = 0
    sockets: dict[str, list[WebSocket]] = field(default_factory=dict)
    timers: list[asyncio.Task] = field(default_factory=list)

    def attach(self, user: str, ws: WebSocket) -> None:
        self.sockets.setdefault(user, []).append(ws)

    def detach(self, user: str, ws: WebSocket) -> bool:
        """Remove one socket; True when that was the user's last connection."""
        conns = self.sockets.get(user, [])
        if ws in conns:
            conns.remove(ws)
        if not conns:
            self.sockets.pop(user, None)
            return True
        return False


class ServerState:
    def __init__(self, registry: Registry, sandboxes: PracticeSandboxes,
                 now: Callable[[], float] = time.time):
        self.registry = registry
        self.sandboxes = sandboxes
        self.now = now
        self.tokens = TokenStore(now)
        self.solo_sessions: dict[str, SoloSession] = {}
        self.hubs: dict[str, RoomHub] = {}
        self.idempotency_cache: dict[tuple, tuple[int, bytes, str]] = {}

    def questions_in_use(self) -> set[int]:
        used: set[int] = set()
        for session in self.solo_sessions.values():
            if not session.submitted:
                used.update(q.id for q in session.questions)
        for hub in self.hubs.values():
            if hub.room.state is RoomState.RUNNING:
                used.update(hub.room.questions_in_use())
        return used


class IdempotencyMiddleware(BaseHTTPMiddleware):
    """Replay cached responses for retried state-changing requests."""

    async def dispatch(self, request: Request, call_next):
        key = request.headers.get("Idempotency-Key")
        if key is None or request.method not in ("POST", "PUT", "DELETE"):
            return await call_next(request)
        state: ServerState = request.app.state.arena
        cache_key = (
            request.headers.get("Authorization", ""),
            request.method,
            request.url.path,
            key,
        )
        cached = state.idempotency_cache.get(cache_key)
        if cached is not None:
            status, body, media_type = cached
            return Response(content=body, status_code=status, media_type=media_type)
        response = await call_next(request)
        body = b""
        async for chunk in response.body_iterator:
            body += chunk
        state.idempotency_cache[cache_key] = (
            response.status_code, body, response.media_type or "application/json",
        )
        return Response(
            content=body, status_code=response.status_code,
            headers=dict(response.headers), media_type=response.media_type,
        )


# --- request bodies ---

class RegisterBody(BaseModel):
    username: str
    password: str
    code: str
    name: str = ""
    program: str = ""


class LoginBody(BaseModel):
    username: str
    password: str


class SoloBody(BaseModel):
    mode: str = "CASUAL"
    count: int = 10
    difficulty: int | None = None
    seed: int | None = None


class AnswerBody(BaseModel):
    index: int
    text: str


class SkipBody(BaseModel):
    index: int


class PracticeBody(BaseModel):
    text: str


class RoomBody(BaseModel):
    name: str
    elimination_mode: str = "SINGLE"
    round_time_limit: int = 120
    allow_spectators: bool = True


class LectureBody(BaseModel):
    title: str
    mode: str = "LECTURE"
    blocks: list[dict] = Field(default_factory=list)


def create_app(registry: Registry, sandboxes: PracticeSandboxes | None = None,
               now: Callable[[], float] = time.time) -> FastAPI:
    sandboxes = sandboxes if sandboxes is not None else PracticeSandboxes()
    registry.on_student_registered = sandboxes.provision
    state = ServerState(registry, sandboxes, now)

    app = FastAPI(title="queryarena")
    app.state.arena = state
    app.add_middleware(IdempotencyMiddleware)

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse({"code": exc.code, "message": exc.message}, status_code=exc.status)

    # --- auth plumbing ---

    def current_account(request: Request) -> Account:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise ApiError(401, "UNAUTHENTICATED", "missing bearer token")
        username = state.tokens.resolve(header[len("Bearer "):])
        if username is None:
            raise ApiError(401, "UNAUTHENTICATED", "invalid or expired token")
        return registry.get_account(username)

    def admin_account(account: Account = Depends(current_account)) -> Account:
        if account.role is not Role.ADMIN:
            raise ApiError(403, "FORBIDDEN", "administrator role required")
        return account

    # --- accounts ---

    @app.post("/api/register", status_code=201)
    def register(body: RegisterBody):
        try:
            account = registry.register_student(
                body.username, body.password, body.code.strip().upper(),
                name=body.name, program=body.program,
            )
        except (BadCode, UsernameTaken, WeakPassword, RegistryError) as exc:
            raise ApiError(422, type(exc).__name__.upper(), str(exc)) from exc
        return {"username": account.username, "role": account.role.value}

    @app.post("/api/login")
    def login(body: LoginBody):
        account = registry.authenticate(body.username, body.password)
        if account is None:
            raise ApiError(401, "BAD_CREDENTIALS", "wrong username or password")
        token = state.tokens.issue(account.username)
        return {"token": token, "username": account.username, "role": account.role.value}

    # --- lectures ---

    @app.get("/api/lectures")
    def list_lectures(_account: Account = Depends(current_account)):
        return [
            {"id": e.id, "title": e.title, "mode": e.mode, "blocks": len(e.blocks)}
            for e in registry.list_lectures()
        ]

    @app.get("/api/lectures/{lecture_id}")
    def get_lecture(lecture_id: int, _account: Account = Depends(current_account)):
        try:
            e = registry.get_lecture(lecture_id)
        except UnknownLecture as exc:
            raise ApiError(404, "NOT_FOUND", str(exc)) from exc
        return {"id": e.id, "title": e.title, "mode": e.mode, "blocks": e.blocks}

    @app.post("/api/lectures", status_code=201)
    def add_lecture(body: LectureBody, account: Account = Depends(admin_account)):
        try:
            e = registry.put_lecture(account.username, body.model_dump())
        except InvalidLecture as exc:
            raise ApiError(422, "INVALID_LECTURE", str(exc)) from exc
        return {"id": e.id, "title": e.title, "mode": e.mode, "blocks": e.blocks}

    @app.put("/api/lectures/{lecture_id}")
    def update_lecture(lecture_id: int, body: LectureBody,
                       account: Account = Depends(admin_account)):
        try:
            e = registry.put_lecture(account.username, body.model_dump(), lecture_id)
        except UnknownLecture as exc:
            raise ApiError(404, "NOT_FOUND", str(exc)) from exc
        except InvalidLecture as exc:
            raise ApiError(422, "INVALID_LECTURE", str(exc)) from exc
        return {"id": e.id, "title": e.title, "mode": e.mode, "blocks": e.blocks}

    # --- profiles and rankings ---

    @app.get("/api/profiles")
    def search_profiles(search: str = "", _account: Account = Depends(current_account)):
        return registry.search_profiles(search)

    @app.get("/api/profile/{username}")
    def get_profile(username: str, _account: Account = Depends(current_account)):
        try:
            return registry.profile(username)
        except UnknownUser as exc:
            raise ApiError(404, "NOT_FOUND", str(exc)) from exc

    @app.get("/api/rankings/{mode}")
    def rankings(mode: str, page: int = 1, _account: Account = Depends(current_account)):
        try:
            entries = registry.leaderboard(mode, page)
        except InvalidMode as exc:
            raise ApiError(422, "INVALID_MODE", str(exc)) from exc
        return {"mode": mode, "page": page, "entries": entries}

    # --- solo sessions ---

    def solo_view(session: SoloSession) -> dict[str, Any]:
        return {
            "id": session.id,
            "player": session.player,
            "mode": session.config.kind,
            "count": len(session.questions),
            "difficulty": session.config.difficulty,
            "submitted": session.submitted,
            "questions": [
                {
                    "index": i,
                    "id": q.id,
                    "text": q.text,
                    "difficulty": q.difficulty,
                    "category": q.category.value,
                    "grading_mode": q.grading_mode.value,
                    "guides": [dict(g) for g in q.guides],
                    "state": slot.state,
                    "answer_text": slot.text,
                }
                for i, (q, slot) in enumerate(zip(session.questions, session.slots))
            ],
        }

    def owned_session(session_id: str, account: Account) -> SoloSession:
        session = state.solo_sessions.get(session_id)
        if session is None or session.player != account.username:
            raise ApiError(404, "NOT_FOUND", "no such solo session")
        return session

    @app.post("/api/solo", status_code=201)
    def create_solo(body: SoloBody, account: Account = Depends(current_account)):
        config = SoloConfig(body.mode.upper(), count=body.count, difficulty=body.difficulty)
        seed = body.seed if body.seed is not None else secrets.randbits(32)
        try:
            questions = game.draw_questions(registry.list_questions(), config, seed)
        except GameError as exc:
            raise ApiError(422, type(exc).__name__.upper(), str(exc)) from exc
        session = SoloSession(
            id=secrets.token_hex(8), player=account.username,
            config=config, questions=questions, started_at=state.now(),
        )
        state.solo_sessions[session.id] = session
        return solo_view(session)

    @app.post("/api/solo/{session_id}/answer")
    def solo_answer(session_id: str, body: AnswerBody,
                    account: Account = Depends(current_account)):
        session = owned_session(session_id, account)
        try:
            session.answer(body.index, body.text)
        except GameError as exc:
            raise ApiError(422, type(exc).__name__.upper(), str(exc)) from exc
        return solo_view(session)

    @app.post("/api/solo/{session_id}/skip")
    def solo_skip(session_id: str, body: SkipBody,
                  account: Account = Depends(current_account)):
        session = owned_session(session_id, account)
        try:
            session.skip(body.index)
        except GameError as exc:
            raise ApiError(422, type(exc).__name__.upper(), str(exc)) from exc
        return solo_view(session)

    @app.post("/api/solo/{session_id}/submit")
    def solo_submit(session_id: str, account: Account = Depends(current_account)):
        session = owned_session(session_id, account)
        mode = GameMode.SOLO_CASUAL if session.config.kind == "CASUAL" else GameMode.SOLO_CUSTOM

        def record(sess: SoloSession, report: game.ScoreReport) -> None:
            registry.add_solo_points(sess.player, mode, report.total_correct)
            registry.record_game(sess.player, mode, {
                "session_id": sess.id,
                "total_correct": report.total_correct,
                "question_count": len(sess.questions),
            })

        try:
            report = game.submit_all(session, on_record=record)
        except GameError as exc:
            raise ApiError(422, type(exc).__name__.upper(), str(exc)) from exc
        registry.flush_deferred_deletes(state.questions_in_use())
        return {
            "session_id": session.id,
            "total_correct": report.total_correct,
            "verdicts": [
                {"index": i, "correct": v.correct, "reason": v.reason.value, "detail": v.detail}
                for i, v in enumerate(report.verdicts)
            ],
            "category_stats": {
                category.value: {"attempted": stat.attempted, "correct": stat.correct}
                for category, stat in report.category_stats.items()
            },
        }

    # --- practice ---

    @app.post("/api/practice/query")
    def practice_query(body: PracticeBody, account: Account = Depends(current_account)):
        if not sandboxes.exists(account.username):
            sandboxes.provision(account.username)
        try:
            outcome = sandboxes.run(account.username, body.text)
        except QueryRejected as exc:
            raise ApiError(422, exc.reason.value, exc.detail) from exc
        except ExecError as exc:
            raise ApiError(422, "EXEC_FAILED", str(exc)) from exc
        if outcome.result is not None:
            from .sql import serialize_result

            return {
                "kind": "rows",
                "columns": outcome.result.columns,
                "rows": [list(row) for row in outcome.result.rows],
                "serialized": serialize_result(outcome.result),
            }
        return {"kind": "count", "affected": outcome.affected}

    # --- question panel (admin) ---

    def question_admin_view(q: guard.Question) -> dict[str, Any]:
        return guard.question_to_spec(q)

    @app.get("/api/questions")
    def list_questions(_account: Account = Depends(admin_account)):
        return [question_admin_view(q) for q in registry.list_questions()]

    @app.post("/api/questions", status_code=201)
    def add_question(spec: dict, account: Account = Depends(admin_account)):
        try:
            q = registry.add_question(account.username, spec)
        except InvalidQuestion as exc:
            raise ApiError(422, "INVALID_QUESTION", str(exc)) from exc
        return question_admin_view(q)

    @app.put("/api/questions/{question_id}")
    def edit_question(question_id: int, spec: dict,
                      account: Account = Depends(admin_account)):
        try:
            q = registry.edit_question(account.username, question_id, spec)
        except UnknownQuestionId as exc:
            raise ApiError(404, "NOT_FOUND", str(exc)) from exc
        except InvalidQuestion as exc:
            raise ApiError(422, "INVALID_QUESTION", str(exc)) from exc
        return question_admin_view(q)

    @app.delete("/api/questions/{question_id}")
    def delete_question(question_id: int, account: Account = Depends(admin_account)):
        try:
            removed = registry.delete_question(
                account.username, question_id, in_use=state.questions_in_use(),
            )
        except UnknownQuestionId as exc:
            raise ApiError(404, "NOT_FOUND", str(exc)) from exc
        return {"deleted": removed, "deferred": not removed}

    @app.post("/api/codes", status_code=201)
    def issue_code(account: Account = Depends(admin_account)):
        try:
            code = registry.issue_verification_code(account.username)
        except NotAdmin as exc:
            raise ApiError(403, "FORBIDDEN", str(exc)) from exc
        return {"code": code.code, "expires_at": code.expires_at}

    # --- rooms ---

    @app.get("/api/rooms")
    def list_rooms(_account: Account = Depends(current_account)):
        return [hub.room.describe() for hub in state.hubs.values()]

    @app.post("/api/rooms", status_code=201)
    def create_room(body: RoomBody, account: Account = Depends(current_account)):
        config = RoomConfig(
            name=body.name,
            elimination_mode=body.elimination_mode.upper(),
            round_time_limit=body.round_time_limit,
            allow_spectators=body.allow_spectators,
        )
        room_id = secrets.token_hex(4)
        is_admin = account.role is Role.ADMIN
        mp_mode = GameMode.MP_COMPETITION if is_admin else GameMode.MP_CASUAL

        def on_match_decided(winner: str, loser: str) -> None:
            registry.update_rating(mp_mode, winner, loser)

        def on_finished(room: Room) -> None:
            assert room.bracket is not None
            for player in room.bracket.seeds:
                registry.record_game(player, mp_mode, {
                    "room_id": room.id,
                    "room_name": room.config.name,
                    "champion": player == room.bracket.champion,
                })
            registry.flush_deferred_deletes(state.questions_in_use())

        try:
            room = Room(
                room_id, account.username, is_admin, config,
                registry.list_questions(),
                on_match_decided=on_match_decided, on_finished=on_finished,
            )
        except InvalidConfig as exc:
            raise ApiError(422, "INVALID_CONFIG", str(exc)) from exc
        state.hubs[room_id] = RoomHub(room=room)
        return room.describe()

    # --- websocket room protocol ---

    async def deliver(hub: RoomHub, messages: list[OutMessage]) -> None:
        for message in messages:
            hub.wire_seq += 1
            frame = {"type": message.kind, "seq": hub.wire_seq, "payload": message.payload}
            targets: list[WebSocket] = []
            if message.to is None:
                for conns in hub.sockets.values():
                    targets.extend(conns)
            else:
                targets.extend(hub.sockets.get(message.to, []))
            for ws in targets:
                try:
                    await ws.send_json(frame)
                except Exception:
                    pass  # a dying socket gets cleaned up by its own handler

    def schedule_timers(hub: RoomHub, messages: list[OutMessage]) -> None:
        for message in messages:
            if message.kind != "round_begin":
                continue
            payload = message.payload
            delay = max(0.0, payload["deadline"] - state.now())

            async def fire(match_id: int = payload["match_id"],
                           round_index: int = payload["round_index"],
                           deadline: float = payload["deadline"],
                           wait: float = delay) -> None:
                await asyncio.sleep(wait)
                await dispatch(hub, {
                    "type": "timeout", "match_id": match_id,
                    "round_index": round_index, "ts": deadline,
                })

            hub.timers.append(asyncio.create_task(fire()))

    async def dispatch(hub: RoomHub, event: dict) -> None:
        async with hub.lock:
            out = hub.room.handle(event)
            if hub.room.state is RoomState.FINISHED:
                for timer in hub.timers:
                    timer.cancel()
                hub.timers.clear()
            else:
                schedule_timers(hub, out)
            await deliver(hub, out)

    @app.websocket("/ws/rooms/{room_id}")
    async def ws_room(websocket: WebSocket, room_id: str, token: str = ""):
        await websocket.accept()
        username = state.tokens.resolve(token)
        if username is None:
            await websocket.close(code=CLOSE_BAD_TOKEN)
            return
        hub = state.hubs.get(room_id)
        if hub is None:
            await websocket.close(code=CLOSE_UNKNOWN_ROOM)
            return
        hub.attach(username, websocket)
        window_start = state.now()
        window_count = 0
        try:
            while True:
                try:
                    frame = await websocket.receive_json()
                except WebSocketDisconnect:
                    raise
                except Exception:
                    await websocket.close(code=CLOSE_PROTOCOL_VIOLATION)
                    break
                now = state.now()
                if now - window_start >= 1.0:
                    window_start, window_count = now, 0
                window_count += 1
                if window_count > WS_MESSAGES_PER_SECOND:
                    await deliver_error(hub, username, "RATE_LIMITED",
                                        "slow down: 10 messages per second")
                    if window_count > 3 * WS_MESSAGES_PER_SECOND:
                        await websocket.close(code=CLOSE_PROTOCOL_VIOLATION)
                        break
                    continue
                if not isinstance(frame, dict) or "type" not in frame:
                    await websocket.close(code=CLOSE_PROTOCOL_VIOLATION)
                    break
                kind = frame["type"]
                payload = frame.get("payload") or {}
                event: dict[str, Any] = {"user": username, "ts": now}
                if kind == "join":
                    event.update(type="join", as_spectator=bool(payload.get("as_spectator")))
                elif kind == "leave":
                    event.update(type="leave")
                elif kind == "chat":
                    event.update(type="chat", text=str(payload.get("text", "")))
                elif kind == "start":
                    event.update(type="start", seed=int(payload.get("seed", secrets.randbits(32))))
                elif kind == "answer":
                    event.update(type="answer", text=str(payload.get("text", "")))
                else:
                    await deliver_error(hub, username, "UNKNOWN_TYPE",
                                        f"unknown message type {kind!r}")
                    continue
                await dispatch(hub, event)
                if kind == "leave":
                    break
        except WebSocketDisconnect:
            pass
        finally:
            last = hub.detach(username, websocket)
            if last and hub.room.is_member(username) and hub.room.state is RoomState.RUNNING:
                # a vanished player forfeits the match in progress
                await dispatch(hub, {"type": "leave", "user": username, "ts": state.now()})

    async def deliver_error(hub: RoomHub, user: str, code: str, message: str) -> None:
        async with hub.lock:
            await deliver(hub, [OutMessage("error", {"code": code, "message": message}, to=user)])

    return app
