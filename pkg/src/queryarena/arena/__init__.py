"""Real-time multiplayer: elimination brackets and room state machines."""

from .bracket import BYE, Bracket, Match, MatchAlreadyResolved, build_bracket, report_result
from .rooms import (
    ArenaError,
    NotCreator,
    NotEnoughPlayers,
    NotMember,
    NotParticipant,
    Room,
    RoomConfig,
    RoomState,
    RoomType,
    replay_room,
)

__all__ = [
    "ArenaError",
    "BYE",
    "Bracket",
    "Match",
    "MatchAlreadyResolved",
    "NotCreator",
    "NotEnoughPlayers",
    "NotMember",
    "NotParticipant",
    "Room",
    "RoomConfig",
    "RoomState",
    "RoomType",
    "build_bracket",
    "replay_room",
    "report_result",
]
