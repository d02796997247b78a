"""Room lifecycle: lobby, chat, timed rounds, and bracket progression.

A Room is a deterministic state machine. Every inbound event (join, chat,
start, answer, timer expiry) carries its timestamp, is stamped with the
room's arrival sequence number, appended to the event log, and processed
synchronously; the outbound messages say what to broadcast. Replaying the
same event log over the same configuration and question bank rebuilds the
identical room, bracket and winners, which is what makes race outcomes
auditable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .. import guard
from ..guard import Question
from .bracket import Bracket, Match, build_bracket, report_result

MAX_CHAT_LENGTH = 500
MAX_REPLAYS = 3


class RoomType(Enum):
    CASUAL = "CASUAL"
    COMPETITION = "COMPETITION"


class RoomState(Enum):
    LOBBY = "LOBBY"
    RUNNING = "RUNNING"
    FINISHED = "FINISHED"


class ArenaError(Exception):
    code = "ARENA_ERROR"


class InvalidConfig(ArenaError):
    code = "INVALID_CONFIG"


class NotCreator(ArenaError):
    code = "NOT_CREATOR"


class NotEnoughPlayers(ArenaError):
    code = "NOT_ENOUGH_PLAYERS"


class RoomRunning(ArenaError):
    code = "ROOM_RUNNING"


class SpectatorsDisabled(ArenaError):
    code = "SPECTATORS_DISABLED"


class AlreadyJoined(ArenaError):
    code = "ALREADY_JOINED"


class NotMember(ArenaError):
    code = "NOT_MEMBER"


class MessageTooLong(ArenaError):
    code = "MESSAGE_TOO_LONG"


class NotParticipant(ArenaError):
    code = "NOT_PARTICIPANT"


class RoundDecided(ArenaError):
    code = "ROUND_DECIDED"


class PastDeadline(ArenaError):
    code = "PAST_DEADLINE"


@dataclass(frozen=True)
class RoomConfig:
    name: str
    elimination_mode: str = "SINGLE"  # SINGLE | DOUBLE
    round_time_limit: int = 120  # seconds
    allow_spectators: bool = True

    def validate(self) -> None:
        if not self.name.strip():
            raise InvalidConfig("room name must not be empty")
        if self.elimination_mode not in ("SINGLE", "DOUBLE"):
            raise InvalidConfig(f"unknown elimination mode {self.elimination_mode!r}")
        if self.round_time_limit <= 0:
            raise InvalidConfig("round time limit must be positive")


@dataclass
class Submission:
    player: str
    text: str
    arrival_seq: int
    correct: bool
    reason: str


@dataclass
class MatchRound:
    question_id: int
    deadline: float
    submissions: list[Submission] = field(default_factory=list)
    winner: str | None = None


@dataclass
class MatchPlay:
    """Round state for one playable bracket match."""

    match_id: int
    players: list[str]
    rounds: list[MatchRound] = field(default_factory=list)
    used_question_ids: set[int] = field(default_factory=set)
    finished: bool = False

    @property
    def current_round(self) -> MatchRound:
        return self.rounds[-1]

    def wrong_count(self, player: str) -> int:
        return sum(
            1
            for r in self.rounds
            for s in r.submissions
            if s.player == player and not s.correct
        )


@dataclass
class ChatMessage:
    author: str
    text: str
    at: float


@dataclass
class OutMessage:
    """A room-level broadcast; to=None fans out to every member."""

    kind: str
    payload: dict
    to: str | None = None


class Room:
    """One multiplayer room. All events funnel through handle() in order."""

    def __init__(
        self,
        room_id: str,
        creator: str,
        creator_is_admin: bool,
        config: RoomConfig,
        bank: list[Question],
        on_match_decided: Callable[[str, str], None] | None = None,
        on_finished: Callable[["Room"], None] | None = None,
    ):
        config.validate()
        if len(bank) == 0:
            raise InvalidConfig("room needs a non-empty question bank")
        self.id = room_id
        self.config = config
        self.creator = creator
        self.room_type = RoomType.COMPETITION if creator_is_admin else RoomType.CASUAL
        self.bank = sorted(bank, key=lambda q: q.id)
        self.players: list[str] = []
        self.spectators: list[str] = []
        self.withdrawn: set[str] = set()
        self.chat_log: list[ChatMessage] = []
        self.state = RoomState.LOBBY
        self.bracket: Bracket | None = None
        self.plays: dict[int, MatchPlay] = {}
        self.seq = 0
        self.event_log: list[dict] = []
        self.on_match_decided = on_match_decided
        self.on_finished = on_finished

    # --- membership helpers ---

    def members(self) -> list[str]:
        return self.players + self.spectators

    def is_member(self, user: str) -> bool:
        return user in self.players or user in self.spectators

    def questions_in_use(self) -> set[int]:
        return {r.question_id for play in self.plays.values() for r in play.rounds}

    # --- event entry point ---

    def handle(self, event: dict) -> list[OutMessage]:
        """Process one event; returns the messages to deliver.

        The event dict needs "type" and "ts"; answers are stamped with the
        room arrival sequence here, which defines the race order.
        """
        self.event_log.append(event)
        arrival_seq = self.seq
        self.seq += 1
        kind = event["type"]
        try:
            if kind == "join":
                return self._join(event["user"], bool(event.get("as_spectator")), event["ts"])
            if kind == "leave":
                return self._leave(event["user"], event["ts"])
            if kind == "chat":
                return self._chat(event["user"], event.get("text", ""), event["ts"])
            if kind == "start":
                return self._start(event["user"], int(event.get("seed", 0)), event["ts"])
            if kind == "answer":
                return self._answer(event["user"], event.get("text", ""), arrival_seq, event["ts"])
            if kind == "timeout":
                return self._timeout(int(event["match_id"]), int(event["round_index"]), event["ts"])
            raise ArenaError(f"unknown room event {kind!r}")
        except ArenaError as exc:
            actor = event.get("user")
            return [OutMessage("error", {"code": exc.code, "message": str(exc)}, to=actor)]

    # --- joins and leaves ---

    def _join(self, user: str, as_spectator: bool, ts: float) -> list[OutMessage]:
        if as_spectator:
            if not self.config.allow_spectators:
                raise SpectatorsDisabled("this room does not allow spectators")
            if user in self.players:
                raise AlreadyJoined("already joined as a player")
            if user not in self.spectators:
                self.spectators.append(user)
            out = [OutMessage("joined", self._roster_payload(user, "spectator"))]
            if self.state is not RoomState.LOBBY:
                out.append(OutMessage("spectate_state", self._spectate_payload(), to=user))
            return out
        if user in self.spectators:
            raise AlreadyJoined("already joined as a spectator")
        if user in self.players:
            raise AlreadyJoined("already joined")
        if self.state is not RoomState.LOBBY:
            raise RoomRunning("the game already started")
        self.players.append(user)
        return [OutMessage("joined", self._roster_payload(user, "player"))]

    def _leave(self, user: str, ts: float) -> list[OutMessage]:
        if not self.is_member(user):
            raise NotMember("not in this room")
        out = [OutMessage("leave", self._roster_payload(user, "gone"))]
        if user in self.spectators:
            self.spectators.remove(user)
            return out
        if self.state is RoomState.LOBBY:
            self.players.remove(user)
            return out
        # mid-game: the current match is forfeited, future ones auto-forfeit
        self.withdrawn.add(user)
        if self.state is RoomState.RUNNING:
            play = self._active_play_for(user)
            if play is not None:
                opponent = next(p for p in play.players if p != user)
                play.current_round.winner = opponent
                out.append(OutMessage("round_end", {"match_id": play.match_id, "winner": opponent}))
                out.extend(self._finish_match(play, opponent, ts))
        return out

    def _roster_payload(self, user: str, role: str) -> dict:
        return {
            "user": user,
            "role": role,
            "players": list(self.players),
            "spectators": list(self.spectators),
            "room": self.describe(),
        }

    # --- chat ---

    def _chat(self, user: str, text: str, ts: float) -> list[OutMessage]:
        if not self.is_member(user):
            raise NotMember("join the room before chatting")
        if len(text) > MAX_CHAT_LENGTH:
            raise MessageTooLong(f"chat messages are capped at {MAX_CHAT_LENGTH} characters")
        self.chat_log.append(ChatMessage(user, text, ts))
        return [OutMessage("chat_broadcast", {"user": user, "text": text, "at": ts})]

    # --- game flow ---

    def _start(self, user: str, seed: int, ts: float) -> list[OutMessage]:
        if user != self.creator:
            raise NotCreator("only the room creator can start the game")
        if self.state is not RoomState.LOBBY:
            raise RoomRunning("the game already started")
        if len(self.players) < 2:
            raise NotEnoughPlayers("at least two players are required")
        self._rng = random.Random(seed)
        seeded = self._rng.sample(self.players, len(self.players))
        self.bracket = build_bracket(seeded, self.config.elimination_mode)
        self.state = RoomState.RUNNING
        out = [OutMessage("bracket", self.bracket_payload())]
        for match in self.bracket.playable_matches():
            out.extend(self._begin_match(match, ts))
        return out

    def _begin_match(self, match: Match, ts: float) -> list[OutMessage]:
        players = [str(match.slots[0]), str(match.slots[1])]
        play = MatchPlay(match_id=match.id, players=players)
        self.plays[match.id] = play
        withdrawn = [p for p in players if p in self.withdrawn]
        if withdrawn:
            winner = self._forfeit_winner(players)
            play.finished = True
            return [
                OutMessage("match_end", {"match_id": match.id, "winner": winner, "forfeit": True})
            ] + self._advance(match.id, winner, ts)
        return self._begin_round(play, ts)

    def _forfeit_winner(self, players: list[str]) -> str:
        standing = [p for p in players if p not in self.withdrawn]
        if len(standing) == 1:
            return standing[0]
        # both gone: the better seed advances so the bracket still terminates
        assert self.bracket is not None
        return min(players, key=self.bracket.seed_index)

    def _begin_round(self, play: MatchPlay, ts: float) -> list[OutMessage]:
        question = self._draw_question(play)
        play.used_question_ids.add(question.id)
        deadline = ts + self.config.round_time_limit
        play.rounds.append(MatchRound(question_id=question.id, deadline=deadline))
        return [
            OutMessage(
                "round_begin",
                {
                    "match_id": play.match_id,
                    "players": list(play.players),
                    "round_index": len(play.rounds) - 1,
                    "question_text": question.text,
                    "guides": [dict(g) for g in question.guides],
                    "difficulty": question.difficulty,
                    "deadline": deadline,
                },
            )
        ]

    def _draw_question(self, play: MatchPlay) -> Question:
        unused = [q for q in self.bank if q.id not in play.used_question_ids]
        if not unused:
            unused = self.bank  # tiny bank: reuse rather than stall
        if play.rounds:
            last = self._question(play.current_round.question_id)
            same = [q for q in unused if q.difficulty == last.difficulty]
            if same:
                unused = same
        return self._rng.choice(unused)

    def _question(self, question_id: int) -> Question:
        for q in self.bank:
            if q.id == question_id:
                return q
        raise ArenaError(f"question {question_id} left the bank")

    def _active_play_for(self, user: str) -> MatchPlay | None:
        for play in self.plays.values():
            if not play.finished and user in play.players:
                return play
        return None

    def _answer(self, user: str, text: str, arrival_seq: int, ts: float) -> list[OutMessage]:
        if self.state is not RoomState.RUNNING:
            raise NotParticipant("no round is running")
        if user in self.spectators:
            raise NotParticipant("spectators cannot answer")
        play = self._active_play_for(user)
        if play is None:
            raise NotParticipant("you are not in an active match")
        rnd = play.current_round
        if rnd.winner is not None:
            raise RoundDecided("the round was already won")
        if ts > rnd.deadline:
            raise PastDeadline("the round timer expired")
        verdict = guard.grade(self._question(rnd.question_id), text)
        rnd.submissions.append(
            Submission(user, text, arrival_seq, verdict.correct, verdict.reason.value)
        )
        out = [
            OutMessage(
                "answer_result",
                {
                    "match_id": play.match_id,
                    "player": user,
                    "correct": verdict.correct,
                    "reason": verdict.reason.value,
                },
            )
        ]
        if verdict.correct:
            rnd.winner = user
            out.append(OutMessage("round_end", {"match_id": play.match_id, "winner": user}))
            out.extend(self._finish_match(play, user, ts))
        return out

    def _timeout(self, match_id: int, round_index: int, ts: float) -> list[OutMessage]:
        play = self.plays.get(match_id)
        if play is None or play.finished:
            return []
        if round_index != len(play.rounds) - 1:
            return []  # stale timer for an earlier round
        rnd = play.current_round
        if rnd.winner is not None:
            return []
        out = [OutMessage("round_end", {"match_id": match_id, "winner": None})]
        if len(play.rounds) <= MAX_REPLAYS:
            out.extend(self._begin_round(play, ts))
            return out
        # replacement questions exhausted: fewest wrong answers wins, the
        # better seed breaks a tie, so every match terminates
        assert self.bracket is not None
        winner = min(
            play.players,
            key=lambda p: (play.wrong_count(p), self.bracket.seed_index(p)),
        )
        rnd.winner = winner
        out.append(
            OutMessage("round_end", {"match_id": match_id, "winner": winner, "by_timeout": True})
        )
        out.extend(self._finish_match(play, winner, ts))
        return out

    def _finish_match(self, play: MatchPlay, winner: str, ts: float) -> list[OutMessage]:
        play.finished = True
        return self._advance(play.match_id, winner, ts)

    def _advance(self, match_id: int, winner: str, ts: float) -> list[OutMessage]:
        assert self.bracket is not None
        match = self.bracket.match(match_id)
        loser = next(s for s in match.slots if s != winner)
        advance = report_result(self.bracket, match_id, winner)
        if self.on_match_decided is not None:
            self.on_match_decided(winner, str(loser))
        out = [
            OutMessage("match_end", {"match_id": match_id, "winner": winner, "loser": loser}),
            OutMessage("bracket", self.bracket_payload()),
        ]
        for nxt in advance.newly_playable:
            out.extend(self._begin_match(nxt, ts))
        if advance.champion is not None:
            self.state = RoomState.FINISHED
            out.append(OutMessage("game_end", {"champion": advance.champion}))
            if self.on_finished is not None:
                self.on_finished(self)
        return out

    # --- views ---

    def describe(self) -> dict:
        return {
            "id": self.id,
            "name": self.config.name,
            "room_type": self.room_type.value,
            "creator": self.creator,
            "state": self.state.value,
            "elimination_mode": self.config.elimination_mode,
            "round_time_limit": self.config.round_time_limit,
            "allow_spectators": self.config.allow_spectators,
            "players": list(self.players),
            "spectators": list(self.spectators),
        }

    def bracket_payload(self) -> dict:
        assert self.bracket is not None
        return {
            "mode": self.bracket.mode,
            "seeds": list(self.bracket.seeds),
            "champion": self.bracket.champion,
            "matches": [
                {
                    "id": m.id,
                    "stage": m.stage,
                    "round": m.round_no,
                    "index": m.index,
                    "slots": list(m.slots),
                    "winner": m.winner,
                    "decided": m.decided,
                }
                for m in sorted(self.bracket.matches.values(), key=lambda m: m.id)
            ],
        }

    def _spectate_payload(self) -> dict:
        active = [
            {
                "match_id": play.match_id,
                "players": play.players,
                "round_index": len(play.rounds) - 1,
                "question_text": self._question(play.current_round.question_id).text,
                "deadline": play.current_round.deadline,
            }
            for play in self.plays.values()
            if not play.finished and play.rounds
        ]
        payload = {"room": self.describe(), "active_rounds": active}
        if self.bracket is not None:
            payload["bracket"] = self.bracket_payload()
        return payload


def replay_room(
    room_id: str,
    creator: str,
    creator_is_admin: bool,
    config: RoomConfig,
    bank: list[Question],
    events: list[dict],
) -> Room:
    """Rebuild a room by replaying its event log; same log, same outcome."""
    room = Room(room_id, creator, creator_is_admin, config, bank)
    for event in events:
        room.handle(event)
    return room
