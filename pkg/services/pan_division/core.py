"""
services.pan_division.core

Domain types for the division game: cards, hands, table positions, finite
injections and the event log, plus instance validation.

Conventions:
- Suits are integers 0..N-1; suit N-1 is the spade suit.
- Spot j of a hand (0 = leftmost) is named by suit N-1-j, so the leftmost
  spot is the spades spot.
- Hands are always full: every spot holds exactly one card.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

PlayerId = str
PictureId = str
SuitIndex = int
SpotIndex = int
Slot = Tuple[PlayerId, int]


def spade_suit(n_suits: int) -> SuitIndex:
    return n_suits - 1


def spot_suit(n_suits: int, spot: SpotIndex) -> SuitIndex:
    """Suit that names a spot (spot 0 -> spades)."""
    return n_suits - 1 - spot


# -----------------------
# Errors
# -----------------------


class DivisionError(Exception):
    """Root of every error raised by this package."""


class InstanceError(DivisionError):
    """The input does not describe a valid instance."""


class NotTotal(InstanceError):
    def __init__(self, player: PlayerId, index: int):
        super().__init__(f"no image for ({player}, {index})")
        self.player = player
        self.index = index


class DuplicateImage(InstanceError):
    def __init__(self, card: "Card", first: Slot, second: Slot):
        super().__init__(f"card {card} is the image of both {first} and {second}")
        self.card = card
        self.first = first
        self.second = second


class UnknownPicture(InstanceError):
    def __init__(self, card: "Card"):
        super().__init__(f"card {card} uses an undeclared picture")
        self.card = card


class SuitOutOfRange(InstanceError):
    def __init__(self, card: "Card", n_suits: int):
        super().__init__(f"card {card} has a suit outside 0..{n_suits - 1}")
        self.card = card


class UnknownPlayer(InstanceError):
    def __init__(self, player: PlayerId):
        super().__init__(f"unknown player {player!r}")
        self.player = player


class Infeasible(InstanceError):
    pass


class TooLarge(InstanceError):
    pass


class RelabelError(InstanceError):
    pass


class FormatError(DivisionError):
    """A JSON document does not have the expected shape."""


class EngineError(DivisionError):
    """An internal invariant of the game was violated."""


class UnshapedHand(EngineError):
    def __init__(self, player: PlayerId):
        super().__init__(f"hand of {player!r} holds a spade but not in the leftmost spot")
        self.player = player


class RequestConflict(EngineError):
    def __init__(self, card: "Card", first: PlayerId, second: PlayerId):
        super().__init__(f"{first!r} and {second!r} both request {card}")
        self.card = card
        self.first = first
        self.second = second


class RequestedCardMissing(EngineError):
    def __init__(self, card: "Card"):
        super().__init__(f"requested card {card} is not on the table")
        self.card = card


class SwapCollision(EngineError):
    pass


class NotStable(EngineError):
    pass


class RoundLimitExceeded(EngineError):
    def __init__(self, max_round_pairs: int):
        super().__init__(f"no fixed point within {max_round_pairs} round pairs")
        self.max_round_pairs = max_round_pairs


class ReplayMismatch(EngineError):
    pass


# -----------------------
# Cards and injections
# -----------------------


@dataclass(frozen=True, order=True)
class Card:
    picture: PictureId
    suit: SuitIndex

    def is_spade(self, n_suits: int) -> bool:
        return self.suit == spade_suit(n_suits)

    def __str__(self) -> str:
        return f"{self.picture}/{self.suit}"


@dataclass(frozen=True)
class InjectionMap:
    """Explicit finite map (player, index) -> card. Entry order is meaningful for output only."""

    n_indices: int
    entries: Dict[Slot, Card] = field(default_factory=dict)

    @classmethod
    def from_hands(cls, n_indices: int, hands: Mapping[PlayerId, Sequence[Card]]) -> "InjectionMap":
        entries: Dict[Slot, Card] = {}
        for player, cards in hands.items():
            for index, card in enumerate(cards):
                entries[(player, index)] = card
        return cls(n_indices=n_indices, entries=entries)

    def players(self) -> Tuple[PlayerId, ...]:
        return tuple(dict.fromkeys(p for p, _ in self.entries))

    def hand(self, player: PlayerId) -> Tuple[Card, ...]:
        return tuple(self.entries[(player, j)] for j in range(self.n_indices))

    def hands(self) -> Dict[PlayerId, Tuple[Card, ...]]:
        return {p: self.hand(p) for p in self.players()}

    def pictures(self) -> Tuple[PictureId, ...]:
        return tuple(dict.fromkeys(c.picture for c in self.entries.values()))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Instance:
    players: Tuple[PlayerId, ...]
    pictures: Tuple[PictureId, ...]
    n_suits: int
    deal: InjectionMap


# -----------------------
# Table position
# -----------------------


@dataclass(frozen=True)
class TableState:
    n_suits: int
    players: Tuple[PlayerId, ...]
    pictures: Tuple[PictureId, ...]
    hands: Dict[PlayerId, Tuple[Card, ...]]
    deck: FrozenSet[Card]

    def hand(self, player: PlayerId) -> Tuple[Card, ...]:
        try:
            return self.hands[player]
        except KeyError:
            raise UnknownPlayer(player) from None

    def cards(self) -> Iterator[Card]:
        for player in self.players:
            yield from self.hands[player]
        yield from self.deck

    def replace(self, hands: Dict[PlayerId, Tuple[Card, ...]], deck: FrozenSet[Card]) -> "TableState":
        return TableState(self.n_suits, self.players, self.pictures, hands, deck)


@dataclass(frozen=True)
class CardLocation:
    """A hand slot, or the deck when player is None."""

    player: Optional[PlayerId] = None
    spot: Optional[SpotIndex] = None

    @property
    def in_deck(self) -> bool:
        return self.player is None


DECK = CardLocation()


# -----------------------
# Events and traces
# -----------------------


class Phase(str, enum.Enum):
    SHAPE_UP = "shape_up"
    SHIP_OUT = "ship_out"


@dataclass(frozen=True)
class ShapeUpEvent:
    player: PlayerId
    from_spot: SpotIndex
    spade: Card
    displaced: Card

    kind = Phase.SHAPE_UP


@dataclass(frozen=True)
class ShipOutEvent:
    player: PlayerId
    spot: SpotIndex
    bad_spade: Card
    requested: Card
    source: CardLocation

    kind = Phase.SHIP_OUT


GameEvent = Union[ShapeUpEvent, ShipOutEvent]


@dataclass(frozen=True)
class Round:
    index: int
    phase: Phase
    events: Tuple[GameEvent, ...] = ()


@dataclass
class GameTrace:
    rounds: List[Round] = field(default_factory=list)

    def events(self) -> Iterator[GameEvent]:
        for rnd in self.rounds:
            yield from rnd.events

    @property
    def round_pairs(self) -> int:
        return (len(self.rounds) + 1) // 2


# -----------------------
# Operations
# -----------------------


def leftmost_spade_spot(hand: Sequence[Card], n_suits: int) -> Optional[SpotIndex]:
    for j, card in enumerate(hand):
        if card.is_spade(n_suits):
            return j
    return None


def validate_instance(inst: Instance) -> Instance:
    """Return the instance unchanged if its deal is a total injection A×N -> B×N, else raise."""
    n = inst.n_suits
    if n < 1:
        raise InstanceError(f"n_suits must be at least 1, got {n}")
    if inst.deal.n_indices != n:
        raise InstanceError(f"deal has {inst.deal.n_indices} indices but the instance has {n} suits")

    players = set(inst.players)
    pictures = set(inst.pictures)
    if len(players) != len(inst.players):
        raise InstanceError("player list contains duplicates")
    if len(pictures) != len(inst.pictures):
        raise InstanceError("picture list contains duplicates")

    seen: Dict[Card, Slot] = {}
    for slot, card in inst.deal.entries.items():
        player, index = slot
        if player not in players:
            raise UnknownPlayer(player)
        if not 0 <= index < n:
            raise InstanceError(f"index {index} of {player!r} is outside 0..{n - 1}")
        if card.picture not in pictures:
            raise UnknownPicture(card)
        if not 0 <= card.suit < n:
            raise SuitOutOfRange(card, n)
        if card in seen:
            raise DuplicateImage(card, seen[card], slot)
        seen[card] = slot

    for player in inst.players:
        for index in range(n):
            if (player, index) not in inst.deal.entries:
                raise NotTotal(player, index)
    return inst


def new_table(inst: Instance) -> TableState:
    n = inst.n_suits
    hands = {p: inst.deal.hand(p) for p in inst.players}
    dealt = set(inst.deal.entries.values())
    deck = frozenset(Card(b, s) for b in inst.pictures for s in range(n) if Card(b, s) not in dealt)
    return TableState(n_suits=n, players=tuple(inst.players), pictures=tuple(inst.pictures), hands=hands, deck=deck)


def quality(state: TableState, player: PlayerId) -> int:
    """Count of spots holding the hand-name picture in the suit that names the spot (0 if unnamed)."""
    hand = state.hand(player)
    n = state.n_suits
    named_at = leftmost_spade_spot(hand, n)
    if named_at is None:
        return 0
    name = hand[named_at].picture
    return sum(1 for j, card in enumerate(hand) if card.picture == name and card.suit == spot_suit(n, j))
