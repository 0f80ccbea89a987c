"""
services.pan_division.engine

Simultaneous Shape Up / Ship Out rounds, fixed-point detection and extraction.

Every round reads its swaps from the frozen position it is given and applies
them as one permutation; states are never mutated in place.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from .core import (
    DECK,
    Card,
    CardLocation,
    GameEvent,
    GameTrace,
    InjectionMap,
    InstanceError,
    NotStable,
    Phase,
    PictureId,
    PlayerId,
    RequestConflict,
    RequestedCardMissing,
    Round,
    RoundLimitExceeded,
    ShapeUpEvent,
    ShipOutEvent,
    Slot,
    SpotIndex,
    SwapCollision,
    TableState,
    UnshapedHand,
    leftmost_spade_spot,
    spot_suit,
)

log = logging.getLogger("pan_division.engine")


@dataclass(frozen=True)
class RoundOutcome:
    state: TableState
    events: Tuple[GameEvent, ...] = ()

    @property
    def changed(self) -> bool:
        return bool(self.events)


def hand_name(state: TableState, player: PlayerId) -> Optional[PictureId]:
    """Picture of the leftmost spade; None for a hand without spades."""
    hand = state.hand(player)
    j = leftmost_spade_spot(hand, state.n_suits)
    return None if j is None else hand[j].picture


def shape_up_round(state: TableState) -> RoundOutcome:
    n = state.n_suits
    hands = dict(state.hands)
    events: List[GameEvent] = []
    for player in state.players:
        hand = state.hands[player]
        j = leftmost_spade_spot(hand, n)
        if j is None or j == 0:
            continue
        cards = list(hand)
        cards[0], cards[j] = hand[j], hand[0]
        hands[player] = tuple(cards)
        events.append(ShapeUpEvent(player=player, from_spot=j, spade=hand[j], displaced=hand[0]))

    if not events:
        return RoundOutcome(state)
    return RoundOutcome(state.replace(hands, state.deck), tuple(events))


def leftmost_bad_spade(state: TableState, player: PlayerId) -> Optional[SpotIndex]:
    hand = state.hand(player)
    n = state.n_suits
    first = leftmost_spade_spot(hand, n)
    if first is None:
        return None
    if first != 0:
        raise UnshapedHand(player)
    for j in range(1, n):
        if hand[j].is_spade(n):
            return j
    return None


def requested_card(state: TableState, player: PlayerId) -> Optional[Card]:
    j = leftmost_bad_spade(state, player)
    if j is None:
        return None
    return Card(state.hand(player)[0].picture, spot_suit(state.n_suits, j))


def _locations(state: TableState) -> Dict[Card, CardLocation]:
    where: Dict[Card, CardLocation] = {card: DECK for card in state.deck}
    for player in state.players:
        for j, card in enumerate(state.hands[player]):
            where[card] = CardLocation(player, j)
    return where


def _write(writes: Dict[Slot, Card], slot: Slot, card: Card) -> None:
    if slot in writes:
        raise SwapCollision(f"slot {slot} is written twice in one round")
    writes[slot] = card


def ship_out_round(state: TableState) -> RoundOutcome:
    n = state.n_suits
    requests: List[Tuple[PlayerId, SpotIndex, Card, Card]] = []
    claimed: Dict[Card, PlayerId] = {}
    for player in state.players:
        j = leftmost_bad_spade(state, player)
        if j is None:
            continue
        hand = state.hands[player]
        wanted = Card(hand[0].picture, spot_suit(n, j))
        if wanted in claimed:
            raise RequestConflict(wanted, claimed[wanted], player)
        claimed[wanted] = player
        requests.append((player, j, hand[j], wanted))

    if not requests:
        return RoundOutcome(state)

    where = _locations(state)
    writes: Dict[Slot, Card] = {}
    leaving_deck: Set[Card] = set()
    entering_deck: Set[Card] = set()
    events: List[GameEvent] = []
    for player, j, spade, wanted in requests:
        source = where.get(wanted)
        if source is None:
            raise RequestedCardMissing(wanted)
        _write(writes, (player, j), wanted)
        if source.in_deck:
            leaving_deck.add(wanted)
            entering_deck.add(spade)
        else:
            _write(writes, (source.player, source.spot), spade)
        events.append(ShipOutEvent(player=player, spot=j, bad_spade=spade, requested=wanted, source=source))

    touched: Dict[PlayerId, List[Card]] = {}
    for (player, j), card in writes.items():
        cards = touched.setdefault(player, list(state.hands[player]))
        cards[j] = card
    hands = dict(state.hands)
    hands.update({player: tuple(cards) for player, cards in touched.items()})
    deck = (state.deck - leaving_deck) | entering_deck
    return RoundOutcome(state.replace(hands, deck), tuple(events))


def is_stable(state: TableState) -> bool:
    n = state.n_suits
    return not any(card.is_spade(n) for player in state.players for card in state.hands[player][1:])


def default_round_pair_cap(state: TableState) -> int:
    return 2 * state.n_suits * len(state.players) + 2


def run_to_stability(state: TableState, max_round_pairs: Optional[int] = None) -> Tuple[TableState, GameTrace]:
    """
    Alternate Shape Up and Ship Out until a round pair changes nothing.

    The returned trace holds every round before the final silent pair.

    Raises:
        RoundLimitExceeded: if more than max_round_pairs pairs are needed
            (default 2·N·|A| + 2).
    """
    cap = default_round_pair_cap(state) if max_round_pairs is None else max_round_pairs
    trace = GameTrace()
    pairs = 0
    while True:
        if pairs >= cap:
            raise RoundLimitExceeded(cap)
        pairs += 1
        up = shape_up_round(state)
        out = ship_out_round(up.state)
        if not up.changed and not out.changed:
            break
        trace.rounds.append(Round(len(trace.rounds) + 1, Phase.SHAPE_UP, up.events))
        trace.rounds.append(Round(len(trace.rounds) + 1, Phase.SHIP_OUT, out.events))
        log.debug("round pair %s: %s shape-up, %s ship-out", pairs, len(up.events), len(out.events))
        state = out.state

    if not is_stable(state):
        raise NotStable("silent round pair on a position with misplaced spades")
    return state, trace


def extract(state: TableState) -> InjectionMap:
    """Read spots 1..N-1 of a stable position as (player, j-1) -> card."""
    n = state.n_suits
    if n < 2:
        raise InstanceError("extraction needs at least 2 suits")
    if not is_stable(state):
        raise NotStable("extract called on a position that still has bad spades")
    hands = {player: state.hands[player][1:] for player in state.players}
    return InjectionMap.from_hands(n - 1, hands)
