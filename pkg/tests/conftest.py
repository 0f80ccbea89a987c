from __future__ import annotations

from typing import Dict, Sequence, Tuple

import pytest

from services.pan_division.core import Card, InjectionMap, Instance

# Suit indices for N = 4
SPADES, HEARTS, DIAMONDS, CLUBS = 3, 2, 1, 0


def make_instance(
    hands: Dict[str, Sequence[Tuple[str, int]]],
    pictures: Sequence[str],
    n_suits: int = 4,
) -> Instance:
    deal = InjectionMap.from_hands(n_suits, {p: [Card(b, s) for b, s in cards] for p, cards in hands.items()})
    return Instance(players=tuple(hands), pictures=tuple(pictures), n_suits=n_suits, deal=deal)


@pytest.fixture
def walkthrough() -> Instance:
    """One player holding Ape of clubs, Chicken of spades, Bolt of hearts, Two of spades."""
    return make_instance(
        {"p0": [("Ape", CLUBS), ("Chicken", SPADES), ("Bolt", HEARTS), ("Two", SPADES)]},
        pictures=["Ape", "Bolt", "Chicken", "Two"],
    )


@pytest.fixture
def walkthrough_two_players() -> Instance:
    """
    The Chicken hand ships out its Two of spades while the Ape hand calls away
    the Ape of clubs, shipping in the Bolt of spades at the diamonds spot.
    """
    return make_instance(
        {
            "p0": [("Ape", CLUBS), ("Bolt", HEARTS), ("Chicken", SPADES), ("Two", SPADES)],
            "p1": [("Ape", SPADES), ("Ape", HEARTS), ("Ape", DIAMONDS), ("Bolt", SPADES)],
        },
        pictures=["Ape", "Bolt", "Chicken", "Two"],
    )


@pytest.fixture
def four_way_call() -> Instance:
    """Four named hands all call a card from the same spadeless hand in one round."""
    hands = {
        name: [(name, SPADES), (filler, SPADES), (name, DIAMONDS), (name, CLUBS)]
        for name, filler in (("P", "u"), ("Q", "v"), ("R", "w"), ("S", "z"))
    }
    hands["T"] = [("P", HEARTS), ("Q", HEARTS), ("R", HEARTS), ("S", HEARTS)]
    return make_instance(hands, pictures=["P", "Q", "R", "S", "u", "v", "w", "z"])
