"""Single and double elimination bracket graphs.

The bracket is built as a complete match graph up front: the seeded field
is padded with BYE phantoms to the next power of two, every match knows
where its winner (and, for double elimination, its loser) goes, and
matches involving phantoms resolve automatically. Reporting a result
routes players onward and returns the matches that just became playable,
so a room can start their rounds immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

BYE = "__BYE__"

SINGLE = "SINGLE"
DOUBLE = "DOUBLE"


class MatchAlreadyResolved(Exception):
    pass


@dataclass
class Match:
    id: int
    stage: str  # W (winners), L (losers), GF (grand final), RF (reset final)
    round_no: int
    index: int
    slots: list[str | None] = field(default_factory=lambda: [None, None])
    winner: str | None = None
    loser: str | None = None
    winner_to: tuple[int, int] | None = None  # (match id, slot)
    loser_to: tuple[int, int] | None = None

    @property
    def resolved(self) -> bool:
        return self.winner is not None

    @property
    def has_phantom(self) -> bool:
        return BYE in self.slots

    @property
    def playable(self) -> bool:
        return (
            not self.resolved
            and self.slots[0] is not None
            and self.slots[1] is not None
            and not self.has_phantom
        )

    @property
    def decided(self) -> bool:
        """True for a resolved match actually played between two real players."""
        return self.resolved and not self.has_phantom


@dataclass
class Bracket:
    mode: str
    seeds: list[str]
    matches: dict[int, Match]
    final_id: int
    reset_id: int | None = None
    champion: str | None = None

    def match(self, match_id: int) -> Match:
        return self.matches[match_id]

    def playable_matches(self) -> list[Match]:
        return [m for m in self.matches.values() if m.playable]

    def decided_count(self) -> int:
        return sum(1 for m in self.matches.values() if m.decided)

    def seed_index(self, player: str) -> int:
        return self.seeds.index(player)


def build_bracket(seeded_players: list[str], mode: str) -> Bracket:
    """Build the full match graph for an already-seeded field (len >= 2)."""
    if len(seeded_players) < 2:
        raise ValueError("a bracket needs at least two players")
    if mode not in (SINGLE, DOUBLE):
        raise ValueError(f"unknown elimination mode {mode!r}")
    n = len(seeded_players)
    size = 1
    while size < n:
        size *= 2
    rounds = size.bit_length() - 1  # log2(size)

    matches: dict[int, Match] = {}
    next_id = 0

    def new_match(stage: str, round_no: int, index: int) -> Match:
        nonlocal next_id
        m = Match(next_id, stage, round_no, index)
        matches[next_id] = m
        next_id += 1
        return m

    winners: list[list[Match]] = []
    for r in range(1, rounds + 1):
        winners.append([new_match("W", r, i) for i in range(size // (2 ** r))])

    losers: list[list[Match]] = []
    lb_rounds = 2 * (rounds - 1) if mode == DOUBLE else 0
    for j in range(1, lb_rounds + 1):
        if j % 2 == 0:  # major round: winners-bracket losers drop in
            count = size // (2 ** (j // 2 + 1))
        elif j == 1:
            count = size // 4
        else:  # minor round: previous losers round winners pair up
            count = size // (2 ** ((j + 1) // 2 + 1))
        losers.append([new_match("L", j, i) for i in range(count)])

    grand_final = new_match("GF", 1, 0) if mode == DOUBLE else None
    reset_final = new_match("RF", 1, 0) if mode == DOUBLE else None

    # winners-bracket routing
    for r_idx, round_matches in enumerate(winners):
        is_final = r_idx == rounds - 1
        for m in round_matches:
            if not is_final:
                target = winners[r_idx + 1][m.index // 2]
                m.winner_to = (target.id, m.index % 2)
            elif grand_final is not None:
                m.winner_to = (grand_final.id, 0)
            if mode == DOUBLE:
                if rounds == 1:
                    assert grand_final is not None
                    m.loser_to = (grand_final.id, 1)
                elif r_idx == 0:
                    target = losers[0][m.index // 2]
                    m.loser_to = (target.id, m.index % 2)
                else:
                    target = losers[2 * r_idx - 1][m.index]  # LB round 2*r_idx
                    m.loser_to = (target.id, 0)

    # losers-bracket routing
    for j_idx, round_matches in enumerate(losers):
        j = j_idx + 1
        is_lb_final = j == lb_rounds
        for m in round_matches:
            if is_lb_final:
                assert grand_final is not None
                m.winner_to = (grand_final.id, 1)
            elif j % 2 == 1:  # minor: winner meets the next drop-in
                target = losers[j_idx + 1][m.index]
                m.winner_to = (target.id, 1)
            else:  # major: winners pair up in the next minor round
                target = losers[j_idx + 1][m.index // 2]
                m.winner_to = (target.id, m.index % 2)

    bracket = Bracket(
        mode=mode,
        seeds=list(seeded_players),
        matches=matches,
        final_id=(grand_final.id if grand_final is not None else winners[-1][0].id),
        reset_id=(reset_final.id if reset_final is not None else None),
    )

    # first-round placement: byes pair against the leading seeds, the rest
    # pair among themselves, so two byes never meet in round one
    byes = size - n
    first = winners[0]
    slot_values: list[str] = []
    for i in range(byes):
        slot_values.extend([seeded_players[i], BYE])
    slot_values.extend(seeded_players[byes:])
    for i, value in enumerate(slot_values):
        first[i // 2].slots[i % 2] = value

    _resolve_phantoms(bracket)
    return bracket


def _resolve_phantoms(bracket: Bracket) -> None:
    """Auto-resolve every match that involves a phantom, cascading forward."""
    changed = True
    while changed:
        changed = False
        for m in bracket.matches.values():
            if m.resolved or None in m.slots or not m.has_phantom:
                continue
            a, b = m.slots
            winner = a if b == BYE else b
            _settle(bracket, m, winner)  # phantom matches are never "decided"
            changed = True


def _settle(bracket: Bracket, m: Match, winner: str) -> None:
    loser = m.slots[1] if m.slots[0] == winner else m.slots[0]
    m.winner = winner
    m.loser = loser
    if m.stage == "GF":
        _settle_grand_final(bracket, m)
        return
    if m.stage == "RF":
        bracket.champion = winner
        return
    if m.winner_to is not None:
        target_id, slot = m.winner_to
        bracket.matches[target_id].slots[slot] = winner
    elif m.stage == "W":
        bracket.champion = winner  # single elimination final
    if m.loser_to is not None:
        target_id, slot = m.loser_to
        bracket.matches[target_id].slots[slot] = loser


def _settle_grand_final(bracket: Bracket, gf: Match) -> None:
    # slot 0 holds the winners-bracket champion (no losses yet): if they win
    # the title is decided, otherwise both stand at one loss and one reset
    # final settles it
    assert bracket.reset_id is not None
    if gf.winner == gf.slots[0]:
        bracket.champion = gf.winner
    else:
        reset = bracket.matches[bracket.reset_id]
        reset.slots = [gf.slots[0], gf.slots[1]]


@dataclass
class Advance:
    """What changed after a reported result."""

    newly_playable: list[Match]
    champion: str | None


def report_result(bracket: Bracket, match_id: int, winner: str) -> Advance:
    """Record a played match's winner and route both players onward."""
    m = bracket.matches[match_id]
    if m.resolved:
        raise MatchAlreadyResolved(f"match {match_id} already has a winner")
    if not m.playable:
        raise ValueError(f"match {match_id} is not ready to play")
    if winner not in m.slots:
        raise ValueError(f"{winner!r} is not in match {match_id}")
    before = {x.id for x in bracket.playable_matches()}
    _settle(bracket, m, winner)
    _resolve_phantoms(bracket)
    newly = [x for x in bracket.playable_matches() if x.id not in before]
    newly.sort(key=lambda x: x.id)
    return Advance(newly_playable=newly, champion=bracket.champion)
