"""
services.pan_division.codec

JSON documents for instances, injections, traces, table positions and
division results. Output is deterministic: every list follows the declared
player/picture order, so the same input always serializes to the same bytes.

Instance document:
  {"n_suits": N, "players": [...], "pictures": [...],
   "deal": {"<player>": [["<picture>", suit], ... N entries in spot order]}}

Trace: one JSON object per line,
  {"round": k, "phase": "shape_up" | "ship_out", "events": [...]}
(division traces prefix each line with "n": <suit count of the step>).
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .core import (
    DECK,
    Card,
    CardLocation,
    FormatError,
    GameEvent,
    GameTrace,
    InjectionMap,
    Instance,
    Phase,
    PictureId,
    PlayerId,
    ReplayMismatch,
    Round,
    ShapeUpEvent,
    ShipOutEvent,
    TableState,
    new_table,
)

Json = Dict[str, Any]

SUIT_GLYPHS = {3: "♠", 2: "♥", 1: "♦", 0: "♣"}


def dumps(doc: Any) -> str:
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from None


# -----------------------
# Field helpers
# -----------------------


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise FormatError(message)


def _int(value: Any, what: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool), f"{what} must be an integer")
    return value


def _str(value: Any, what: str) -> str:
    _expect(isinstance(value, str), f"{what} must be a string")
    return value


def _str_list(value: Any, what: str) -> Tuple[str, ...]:
    _expect(isinstance(value, list), f"{what} must be a list")
    return tuple(_str(v, f"{what} entry") for v in value)


def _object(value: Any, what: str) -> Json:
    _expect(isinstance(value, dict), f"{what} must be an object")
    return value


def card_to_json(card: Card) -> List[Any]:
    return [card.picture, card.suit]


def card_from_json(value: Any) -> Card:
    _expect(isinstance(value, list) and len(value) == 2, f"card must be [picture, suit], got {value!r}")
    return Card(_str(value[0], "card picture"), _int(value[1], "card suit"))


# -----------------------
# Injections and instances
# -----------------------


def _hands_to_json(hands: Mapping[PlayerId, Sequence[Card]]) -> Json:
    return {player: [card_to_json(c) for c in cards] for player, cards in hands.items()}


def _hands_from_json(value: Any, width: int, what: str) -> Dict[PlayerId, Tuple[Card, ...]]:
    hands: Dict[PlayerId, Tuple[Card, ...]] = {}
    for player, cards in _object(value, what).items():
        _expect(isinstance(cards, list), f"{what}[{player!r}] must be a list")
        _expect(len(cards) <= width, f"{what}[{player!r}] has {len(cards)} cards, more than {width}")
        hands[player] = tuple(card_from_json(c) for c in cards)
    return hands


def _grouped(f: InjectionMap, order: Sequence[PlayerId]) -> Dict[PlayerId, List[Card]]:
    by_player: Dict[PlayerId, Dict[int, Card]] = {}
    for (player, index), card in f.entries.items():
        by_player.setdefault(player, {})[index] = card
    players = [p for p in order if p in by_player] + [p for p in by_player if p not in order]
    return {p: [by_player[p][j] for j in sorted(by_player[p])] for p in players}


def injection_to_json(f: InjectionMap) -> Json:
    return {"n_indices": f.n_indices, "entries": _hands_to_json(_grouped(f, f.players()))}


def injection_from_json(doc: Any) -> InjectionMap:
    doc = _object(doc, "injection")
    n = _int(doc.get("n_indices"), "n_indices")
    _expect(n >= 1, "n_indices must be at least 1")
    return InjectionMap.from_hands(n, _hands_from_json(doc.get("entries", {}), n, "entries"))


def instance_to_json(inst: Instance) -> Json:
    return {
        "n_suits": inst.n_suits,
        "players": list(inst.players),
        "pictures": list(inst.pictures),
        "deal": _hands_to_json(_grouped(inst.deal, inst.players)),
    }


def instance_from_json(doc: Any) -> Instance:
    doc = _object(doc, "instance")
    n = _int(doc.get("n_suits"), "n_suits")
    _expect(n >= 1, "n_suits must be at least 1")
    players = _str_list(doc.get("players"), "players")
    pictures = _str_list(doc.get("pictures"), "pictures")
    hands = _hands_from_json(doc.get("deal"), n, "deal")
    return Instance(players=players, pictures=pictures, n_suits=n, deal=InjectionMap.from_hands(n, hands))


def reduced_instance(inst: Instance, f: InjectionMap) -> Instance:
    """The instance a reduced injection describes, same players and pictures."""
    return Instance(players=inst.players, pictures=inst.pictures, n_suits=f.n_indices, deal=f)


# -----------------------
# Events and traces
# -----------------------


def _location_to_json(loc: CardLocation) -> Json:
    if loc.in_deck:
        return {"where": "deck"}
    return {"where": "hand", "player": loc.player, "spot": loc.spot}


def _location_from_json(value: Any) -> CardLocation:
    doc = _object(value, "source")
    where = doc.get("where")
    if where == "deck":
        return DECK
    _expect(where == "hand", f"unknown source {where!r}")
    return CardLocation(_str(doc.get("player"), "source player"), _int(doc.get("spot"), "source spot"))


def event_to_json(ev: GameEvent) -> Json:
    if isinstance(ev, ShapeUpEvent):
        return {
            "kind": ev.kind.value,
            "player": ev.player,
            "from_spot": ev.from_spot,
            "spade": card_to_json(ev.spade),
            "displaced": card_to_json(ev.displaced),
        }
    return {
        "kind": ev.kind.value,
        "player": ev.player,
        "spot": ev.spot,
        "bad_spade": card_to_json(ev.bad_spade),
        "requested": card_to_json(ev.requested),
        "source": _location_to_json(ev.source),
    }


def event_from_json(value: Any) -> GameEvent:
    doc = _object(value, "event")
    kind = doc.get("kind")
    player = _str(doc.get("player"), "event player")
    if kind == Phase.SHAPE_UP.value:
        return ShapeUpEvent(
            player=player,
            from_spot=_int(doc.get("from_spot"), "from_spot"),
            spade=card_from_json(doc.get("spade")),
            displaced=card_from_json(doc.get("displaced")),
        )
    _expect(kind == Phase.SHIP_OUT.value, f"unknown event kind {kind!r}")
    return ShipOutEvent(
        player=player,
        spot=_int(doc.get("spot"), "spot"),
        bad_spade=card_from_json(doc.get("bad_spade")),
        requested=card_from_json(doc.get("requested")),
        source=_location_from_json(doc.get("source")),
    )


def trace_to_lines(trace: GameTrace, n: Optional[int] = None) -> List[str]:
    lines = []
    for rnd in trace.rounds:
        doc: Json = {} if n is None else {"n": n}
        doc.update({"round": rnd.index, "phase": rnd.phase.value, "events": [event_to_json(e) for e in rnd.events]})
        lines.append(json.dumps(doc, ensure_ascii=False))
    return lines


def trace_from_lines(lines: Iterable[str]) -> GameTrace:
    trace = GameTrace()
    for line in lines:
        if not line.strip():
            continue
        doc = _object(loads(line), "trace line")
        try:
            phase = Phase(doc.get("phase"))
        except ValueError:
            raise FormatError(f"unknown phase {doc.get('phase')!r}") from None
        events = doc.get("events")
        _expect(isinstance(events, list), "events must be a list")
        trace.rounds.append(Round(_int(doc.get("round"), "round"), phase, tuple(event_from_json(e) for e in events)))
    return trace


def trace_digest(trace: GameTrace) -> str:
    h = hashlib.sha256()
    for line in trace_to_lines(trace):
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


# -----------------------
# Table positions and results
# -----------------------


def table_to_json(state: TableState) -> Json:
    order = {b: i for i, b in enumerate(state.pictures)}
    deck = sorted(state.deck, key=lambda c: (order.get(c.picture, len(order)), c.picture, c.suit))
    return {
        "n_suits": state.n_suits,
        "players": list(state.players),
        "pictures": list(state.pictures),
        "hands": _hands_to_json({p: state.hands[p] for p in state.players}),
        "deck": [card_to_json(c) for c in deck],
    }


def table_from_json(doc: Any) -> TableState:
    doc = _object(doc, "table")
    n = _int(doc.get("n_suits"), "n_suits")
    players = _str_list(doc.get("players"), "players")
    pictures = _str_list(doc.get("pictures"), "pictures")
    hands = _hands_from_json(doc.get("hands"), n, "hands")
    _expect(set(hands) == set(players), "hands must list exactly the declared players")
    deck = doc.get("deck")
    _expect(isinstance(deck, list), "deck must be a list")
    return TableState(n, players, pictures, hands, frozenset(card_from_json(c) for c in deck))


def result_to_json(result: Mapping[PlayerId, PictureId]) -> Json:
    return dict(result)


def result_from_json(doc: Any) -> Dict[PlayerId, PictureId]:
    doc = _object(doc, "result map")
    return {_str(p, "player"): _str(b, f"picture of {p!r}") for p, b in doc.items()}


# -----------------------
# Replay
# -----------------------


def replay(inst: Instance, trace: GameTrace) -> TableState:
    """Apply a trace to the initial table of an instance, checking each event against the position."""
    state = new_table(inst)
    n = state.n_suits
    hands = {p: list(state.hands[p]) for p in state.players}
    deck: Set[Card] = set(state.deck)

    def at(player: Optional[PlayerId], spot: Optional[int]) -> Card:
        if player not in hands or spot is None or not 0 <= spot < n:
            raise ReplayMismatch(f"no slot ({player}, {spot})")
        return hands[player][spot]

    for rnd in trace.rounds:
        if rnd.phase is Phase.SHAPE_UP:
            for ev in rnd.events:
                _expect_kind(ev, ShapeUpEvent, rnd)
                if at(ev.player, ev.from_spot) != ev.spade or at(ev.player, 0) != ev.displaced:
                    raise ReplayMismatch(f"round {rnd.index}: shape-up of {ev.player!r} does not match the hand")
                hand = hands[ev.player]
                hand[0], hand[ev.from_spot] = hand[ev.from_spot], hand[0]
            continue

        for ev in rnd.events:
            _expect_kind(ev, ShipOutEvent, rnd)
            if at(ev.player, ev.spot) != ev.bad_spade:
                raise ReplayMismatch(f"round {rnd.index}: {ev.bad_spade} is not at ({ev.player}, {ev.spot})")
            found = ev.requested in deck if ev.source.in_deck else at(ev.source.player, ev.source.spot) == ev.requested
            if not found:
                raise ReplayMismatch(f"round {rnd.index}: {ev.requested} is not at {ev.source}")
        for ev in rnd.events:
            hands[ev.player][ev.spot] = ev.requested
            if ev.source.in_deck:
                deck.discard(ev.requested)
                deck.add(ev.bad_spade)
            else:
                hands[ev.source.player][ev.source.spot] = ev.bad_spade

    return state.replace({p: tuple(hands[p]) for p in state.players}, frozenset(deck))


def _expect_kind(ev: GameEvent, kind: type, rnd: Round) -> None:
    if not isinstance(ev, kind):
        raise ReplayMismatch(f"round {rnd.index} ({rnd.phase.value}) holds a {ev.kind.value} event")


# -----------------------
# Display
# -----------------------


def card_label(card: Card, n_suits: int) -> str:
    if n_suits == 4:
        return f"{card.picture}{SUIT_GLYPHS[card.suit]}"
    return f"{card.picture}/{card.suit}"


def describe_event(ev: GameEvent, n_suits: int) -> str:
    if isinstance(ev, ShapeUpEvent):
        return f"ShapeUp({card_label(ev.spade, n_suits)} ↔ {card_label(ev.displaced, n_suits)})"
    return f"ShipOut({card_label(ev.bad_spade, n_suits)} → {card_label(ev.requested, n_suits)})"
