"""
services.pan_division.oracle

Independent verification: injectivity checks, exhaustive enumeration of small
instances, relabeling, trace statistics and a full conformance sweep.

The conformance sweep replays traces on plain dicts and recomputes every
expected swap by scanning whole positions; it only shares the data types with
the engine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, TypeVar

from .config import Settings
from .core import (
    DECK,
    Card,
    CardLocation,
    EngineError,
    GameTrace,
    Infeasible,
    InjectionMap,
    Instance,
    InstanceError,
    NotTotal,
    Phase,
    PictureId,
    PlayerId,
    RelabelError,
    Round,
    ShapeUpEvent,
    ShipOutEvent,
    SuitOutOfRange,
    TableState,
    TooLarge,
)

K = TypeVar("K", bound=Hashable)


class OracleViolation(EngineError):
    def __init__(self, prop: str, detail: str):
        super().__init__(f"{prop}: {detail}")
        self.prop = prop
        self.detail = detail


# -----------------------
# Injectivity
# -----------------------


@dataclass(frozen=True)
class InjectivityCheck:
    ok: bool
    witness: Optional[Tuple[Any, Any]] = None

    def __bool__(self) -> bool:
        return self.ok


def check_injective(mapping: Mapping[K, Hashable]) -> InjectivityCheck:
    """True iff no two keys share an image; otherwise the first colliding pair of keys."""
    seen: Dict[Hashable, K] = {}
    for key, image in mapping.items():
        if image in seen:
            return InjectivityCheck(False, (seen[image], key))
        seen[image] = key
    return InjectivityCheck(True)


def check_injection(f: InjectionMap, players: Optional[Sequence[PlayerId]] = None) -> InjectivityCheck:
    """Totality over players × n_indices (raises NotTotal) plus injectivity."""
    for player in players if players is not None else f.players():
        for index in range(f.n_indices):
            if (player, index) not in f.entries:
                raise NotTotal(player, index)
    for card in f.entries.values():
        if not 0 <= card.suit < f.n_indices:
            raise SuitOutOfRange(card, f.n_indices)
    return check_injective(f.entries)


# -----------------------
# Enumeration
# -----------------------


def enumerate_instances(num_players: int, num_pictures: int, n_suits: int, limit: Optional[int] = None) -> Iterator[Instance]:
    """Every injective deal A×N -> B×N exactly once, in lexicographic order of the card sequence.

    limit defaults to PGD_ENUMERATE_LIMIT.
    """
    if limit is None:
        limit = Settings.from_env().enumerate_limit
    if n_suits < 1:
        raise InstanceError(f"n_suits must be at least 1, got {n_suits}")
    if num_players > num_pictures:
        raise Infeasible(f"no injection from {num_players}×{n_suits} into {num_pictures}×{n_suits}")
    count = math.perm(num_pictures * n_suits, num_players * n_suits)
    if count > limit:
        raise TooLarge(f"{count} instances exceed the enumeration limit {limit}")

    players = tuple(f"p{i}" for i in range(num_players))
    pictures = tuple(f"b{i}" for i in range(num_pictures))
    cards = [Card(b, s) for b in pictures for s in range(n_suits)]
    slots = [(p, j) for p in players for j in range(n_suits)]
    for images in itertools.permutations(cards, len(slots)):
        yield Instance(players, pictures, n_suits, InjectionMap(n_suits, dict(zip(slots, images))))


# -----------------------
# Relabeling
# -----------------------


def _check_bijection(mapping: Mapping[str, str], domain: Sequence[str], what: str) -> None:
    missing = [x for x in domain if x not in mapping]
    if missing:
        raise RelabelError(f"{what} relabeling misses {missing[0]!r}")
    images = [mapping[x] for x in domain]
    if len(set(images)) != len(images):
        raise RelabelError(f"{what} relabeling is not injective")


def _card(card: Card, pictures: Mapping[PictureId, PictureId]) -> Card:
    return Card(pictures[card.picture], card.suit)


def relabel_injection(f: InjectionMap, players: Mapping[PlayerId, PlayerId], pictures: Mapping[PictureId, PictureId]) -> InjectionMap:
    return InjectionMap(f.n_indices, {(players[p], j): _card(c, pictures) for (p, j), c in f.entries.items()})


def relabel(inst: Instance, players: Mapping[PlayerId, PlayerId], pictures: Mapping[PictureId, PictureId]) -> Instance:
    _check_bijection(players, inst.players, "player")
    _check_bijection(pictures, inst.pictures, "picture")
    return Instance(
        players=tuple(players[p] for p in inst.players),
        pictures=tuple(pictures[b] for b in inst.pictures),
        n_suits=inst.n_suits,
        deal=relabel_injection(inst.deal, players, pictures),
    )


def relabel_trace(trace: GameTrace, players: Mapping[PlayerId, PlayerId], pictures: Mapping[PictureId, PictureId]) -> GameTrace:
    def source(loc: CardLocation) -> CardLocation:
        return DECK if loc.in_deck else CardLocation(players[loc.player], loc.spot)

    rounds = []
    for rnd in trace.rounds:
        events = []
        for ev in rnd.events:
            if isinstance(ev, ShapeUpEvent):
                events.append(ShapeUpEvent(players[ev.player], ev.from_spot, _card(ev.spade, pictures), _card(ev.displaced, pictures)))
            else:
                events.append(
                    ShipOutEvent(
                        players[ev.player],
                        ev.spot,
                        _card(ev.bad_spade, pictures),
                        _card(ev.requested, pictures),
                        source(ev.source),
                    )
                )
        rounds.append(Round(rnd.index, rnd.phase, tuple(events)))
    return GameTrace(rounds)


def relabel_result(
    result: Mapping[PlayerId, PictureId], players: Mapping[PlayerId, PlayerId], pictures: Mapping[PictureId, PictureId]
) -> Dict[PlayerId, PictureId]:
    return {players[p]: pictures[b] for p, b in result.items()}


# -----------------------
# Trace statistics
# -----------------------


@dataclass
class PlayerStats:
    shape_up_count: int = 0
    ship_out_count: int = 0
    ship_in_count: int = 0
    called_away_count: int = 0
    hand_changes: int = 0

    @property
    def total_touches(self) -> int:
        return self.shape_up_count + self.ship_out_count + self.ship_in_count + self.called_away_count


@dataclass
class TraceStats:
    players: Dict[PlayerId, PlayerStats] = field(default_factory=dict)
    round_pairs_used: int = 0

    def max_of(self, attr: str) -> int:
        return max((getattr(s, attr) for s in self.players.values()), default=0)

    def to_json(self) -> Dict[str, Any]:
        return {
            "round_pairs_used": self.round_pairs_used,
            "players": {
                p: {
                    "shape_up_count": s.shape_up_count,
                    "ship_out_count": s.ship_out_count,
                    "ship_in_count": s.ship_in_count,
                    "called_away_count": s.called_away_count,
                    "total_touches": s.total_touches,
                    "hand_changes": s.hand_changes,
                }
                for p, s in self.players.items()
            },
        }


def trace_stats(trace: GameTrace, inst: Instance) -> TraceStats:
    stats = TraceStats(players={p: PlayerStats() for p in inst.players}, round_pairs_used=trace.round_pairs)

    def of(player: Optional[PlayerId]) -> PlayerStats:
        if player not in stats.players:
            raise OracleViolation("trace", f"event names unknown player {player!r}")
        return stats.players[player]

    for rnd in trace.rounds:
        touched: Set[PlayerId] = set()
        for ev in rnd.events:
            touched.add(ev.player)
            if isinstance(ev, ShapeUpEvent):
                of(ev.player).shape_up_count += 1
                continue
            of(ev.player).ship_out_count += 1
            if not ev.source.in_deck and ev.source.player != ev.player:
                of(ev.source.player).called_away_count += 1
                of(ev.source.player).ship_in_count += 1
                touched.add(ev.source.player)
        for player in touched:
            of(player).hand_changes += 1
    return stats


# -----------------------
# Conformance sweep
# -----------------------


def _is_spade(card: Card, n: int) -> bool:
    return card.suit == n - 1


def _quality(hand: Sequence[Card], n: int) -> int:
    spades = [c for c in hand if _is_spade(c, n)]
    if not spades:
        return 0
    name = spades[0].picture
    return sum(1 for j, c in enumerate(hand) if c.picture == name and c.suit == n - 1 - j)


class _Replay:
    """Plain-dict table used by check_game."""

    def __init__(self, inst: Instance):
        self.n = inst.n_suits
        self.universe = {Card(b, s) for b in inst.pictures for s in range(self.n)}
        self.hands: Dict[PlayerId, List[Card]] = {p: [inst.deal.entries[(p, j)] for j in range(self.n)] for p in inst.players}
        self.deck: Set[Card] = self.universe - {c for h in self.hands.values() for c in h}

    def locations(self) -> Dict[Card, CardLocation]:
        where: Dict[Card, CardLocation] = {c: DECK for c in self.deck}
        for player, hand in self.hands.items():
            for j, c in enumerate(hand):
                where[c] = CardLocation(player, j)
        return where

    def check_cards(self, where: str) -> None:
        cards = [c for h in self.hands.values() for c in h] + list(self.deck)
        if len(cards) != len(self.universe) or set(cards) != self.universe:
            raise OracleViolation("all-distinct", f"{where}: table does not hold each card exactly once")


class ImprovementWatch:
    """
    Players whose card is called away by another hand must gain quality
    within the next two rounds (counting the round of the call).
    """

    def __init__(self) -> None:
        self.pending: Dict[PlayerId, Tuple[int, int]] = {}

    def called_away(self, player: PlayerId, quality_before: int, position: int) -> None:
        self.pending.setdefault(player, (quality_before, position + 2))

    def observe(self, player: PlayerId, quality_after: int, position: int, label: Any = None) -> None:
        if player not in self.pending:
            return
        reference, deadline = self.pending[player]
        if quality_after > reference:
            del self.pending[player]
        elif position >= deadline:
            raise OracleViolation("improves within two rounds", f"round {label if label is not None else position}: {player!r} still at {quality_after}")

    def finish(self) -> None:
        if self.pending:
            player, (reference, _) = next(iter(self.pending.items()))
            raise OracleViolation("improves within two rounds", f"game ended with {player!r} still at {reference}")


def _expected_shape_ups(table: _Replay) -> Dict[PlayerId, int]:
    out = {}
    for player, hand in table.hands.items():
        spots = [j for j, c in enumerate(hand) if _is_spade(c, table.n)]
        if spots and spots[0] > 0:
            out[player] = spots[0]
    return out


def _expected_requests(table: _Replay, rnd: Round) -> Dict[PlayerId, Tuple[int, Card]]:
    out = {}
    for player, hand in table.hands.items():
        spots = [j for j, c in enumerate(hand) if _is_spade(c, table.n)]
        if not spots:
            continue
        if spots[0] != 0:
            raise OracleViolation("shaped hands", f"round {rnd.index}: {player!r} ships out unshaped")
        if len(spots) > 1:
            out[player] = (spots[1], Card(hand[0].picture, table.n - 1 - spots[1]))
    return out


def check_game(
    inst: Instance,
    trace: GameTrace,
    final: Optional[TableState] = None,
    extracted: Optional[InjectionMap] = None,
    max_round_pairs: Optional[int] = None,
) -> TraceStats:
    """Replay a trace from scratch and check every per-round property; return its statistics."""
    table = _Replay(inst)
    n = table.n
    table.check_cards("initial deal")

    fixed: Dict[PlayerId, Card] = {p: h[0] for p, h in table.hands.items() if _is_spade(h[0], n)}
    shape_ups: Dict[PlayerId, int] = {p: 0 for p in inst.players}
    watch = ImprovementWatch()

    for i, rnd in enumerate(trace.rounds):
        expected_phase = Phase.SHAPE_UP if i % 2 == 0 else Phase.SHIP_OUT
        if rnd.phase is not expected_phase:
            raise OracleViolation("alternation", f"round {rnd.index} is {rnd.phase.value}")
        before = {p: _quality(h, n) for p, h in table.hands.items()}
        named_before = {p for p, h in table.hands.items() if any(_is_spade(c, n) for c in h)}
        ship_outs: Set[PlayerId] = set()
        shaped: Set[PlayerId] = set()

        if rnd.phase is Phase.SHAPE_UP:
            expected = _expected_shape_ups(table)
            got = {ev.player: ev.from_spot for ev in rnd.events if isinstance(ev, ShapeUpEvent)}
            if got != expected or len(rnd.events) != len(expected):
                raise OracleViolation("shape up", f"round {rnd.index}: expected {expected}, trace has {got}")
            for ev in rnd.events:
                hand = table.hands[ev.player]
                if fixed.get(ev.player) in (hand[0], hand[ev.from_spot]):
                    raise OracleViolation("leftmost spade persistence", f"round {rnd.index}: {ev.player!r}")
                hand[0], hand[ev.from_spot] = hand[ev.from_spot], hand[0]
                shape_ups[ev.player] += 1
                shaped.add(ev.player)
        else:
            expected_req = _expected_requests(table, rnd)
            got_req = {ev.player: (ev.spot, ev.requested) for ev in rnd.events if isinstance(ev, ShipOutEvent)}
            if got_req != expected_req or len(rnd.events) != len(expected_req):
                raise OracleViolation("ship out", f"round {rnd.index}: expected {expected_req}, trace has {got_req}")
            wanted = [card for _, card in expected_req.values()]
            if len(set(wanted)) != len(wanted):
                raise OracleViolation("request uniqueness", f"round {rnd.index}: duplicate request")
            if any(_is_spade(c, n) for c in wanted):
                raise OracleViolation("requests are non-spades", f"round {rnd.index}")

            moves = []
            where = table.locations()
            for ev in rnd.events:
                source = where.get(ev.requested)
                if source is None:
                    raise OracleViolation("conservation", f"{ev.requested} is nowhere on the table")
                if source != ev.source:
                    raise OracleViolation("ship out", f"round {rnd.index}: {ev.requested} is at {source}, not {ev.source}")
                for player, card in ((ev.player, ev.bad_spade), (source.player, ev.requested)):
                    if player is not None and fixed.get(player) == card:
                        raise OracleViolation("leftmost spade persistence", f"round {rnd.index}: {player!r}")
                moves.append(ev)
                ship_outs.add(ev.player)
                if not source.in_deck and source.player != ev.player:
                    watch.called_away(source.player, before[source.player], i)
            for ev in moves:
                table.hands[ev.player][ev.spot] = ev.requested
                if ev.source.in_deck:
                    table.deck.remove(ev.requested)
                    table.deck.add(ev.bad_spade)
                else:
                    table.hands[ev.source.player][ev.source.spot] = ev.bad_spade

        table.check_cards(f"after round {rnd.index}")
        for player, hand in table.hands.items():
            if player in fixed and hand[0] != fixed[player]:
                raise OracleViolation("leftmost spade persistence", f"{player!r} lost {fixed[player]}")
            if player not in fixed and _is_spade(hand[0], n):
                fixed[player] = hand[0]
            after = _quality(hand, n)
            if player in named_before and after < before[player]:
                raise OracleViolation("quality monotonicity", f"round {rnd.index}: {player!r} {before[player]} -> {after}")
            if player in ship_outs and after != before[player] + 1:
                raise OracleViolation("quality step", f"round {rnd.index}: {player!r} {before[player]} -> {after}")
            if player in shaped and after <= before[player]:
                raise OracleViolation("shape-up improves", f"round {rnd.index}: {player!r} {before[player]} -> {after}")
            watch.observe(player, after, i, rnd.index)

    watch.finish()

    over = [p for p, k in shape_ups.items() if k > 1]
    if over:
        raise OracleViolation("one shape-up per player", f"{over[0]!r} shaped up {shape_ups[over[0]]} times")
    for player, hand in table.hands.items():
        if any(_is_spade(c, n) for c in hand[1:]):
            raise OracleViolation("stability", f"{player!r} ends with a spade outside the leftmost spot")

    if final is not None:
        if {p: list(h) for p, h in final.hands.items()} != table.hands or set(final.deck) != table.deck:
            raise OracleViolation("replay", "replayed trace does not reproduce the final table")

    if n >= 2:
        reduced = {(p, j - 1): h[j] for p, h in table.hands.items() for j in range(1, n)}
        check = check_injective(reduced)
        if not check:
            raise OracleViolation("extraction injectivity", f"collision {check.witness}")
        if extracted is not None and dict(extracted.entries) != reduced:
            raise OracleViolation("extraction", "extracted injection differs from the stable table")

    stats = trace_stats(trace, inst)
    cap = 2 * n * len(inst.players) + 2 if max_round_pairs is None else max_round_pairs
    if stats.round_pairs_used + 1 > cap:
        raise OracleViolation("round cap", f"{stats.round_pairs_used} round pairs with cap {cap}")
    for player, s in stats.players.items():
        if s.hand_changes > 2 * n:
            raise OracleViolation("hand-change bound", f"{player!r} changed {s.hand_changes} times (N={n})")
    return stats
