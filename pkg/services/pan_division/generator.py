"""
services.pan_division.generator

Seeded instance generation with a platform-independent generator.

SplitMix64 (64-bit state, all arithmetic mod 2**64):
    state  <- state + 0x9E3779B97F4A7C15
    z      <- (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB
    output  = z ^ (z >> 31)
Bounded draws reject the top partial block of 2**64 so every value in
[0, bound) is equally likely; shuffles are Fisher-Yates from the last index
down. Seeds are reduced mod 2**64. Nothing here depends on Python's random
module, so generated instances are the same on every platform and version.
"""

from __future__ import annotations

from typing import Iterator, List, MutableSequence, Sequence, Tuple, TypeVar

from .core import Card, Infeasible, InjectionMap, Instance, InstanceError, PictureId, PlayerId

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB

SUIT_COUNT_CHOICES = (1, 2, 3, 4, 6)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX_1) & MASK64
        z = ((z ^ (z >> 27)) * MIX_2) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next64()
            if x < limit:
                return x % bound

    def between(self, lower: int, upper: int) -> int:
        """Uniform integer in [lower, upper]."""
        return lower + self.below(upper - lower + 1)

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]

    def shuffle(self, items: MutableSequence[T]) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def player_ids(count: int) -> List[PlayerId]:
    return [f"p{i}" for i in range(count)]


def picture_ids(count: int) -> List[PictureId]:
    return [f"b{i}" for i in range(count)]


def generate(num_players: int, num_pictures: int, n_suits: int, seed: int) -> Instance:
    """Pseudo-random injective deal of num_players hands from num_pictures × n_suits cards."""
    if n_suits < 1:
        raise InstanceError(f"n_suits must be at least 1, got {n_suits}")
    if num_players < 0 or num_pictures < 0:
        raise InstanceError("player and picture counts must be non-negative")
    if num_players > num_pictures:
        raise Infeasible(f"{num_players} players cannot be dealt from {num_pictures} pictures")

    players = player_ids(num_players)
    pictures = picture_ids(num_pictures)
    cards = [Card(b, s) for b in pictures for s in range(n_suits)]
    SplitMix64(seed).shuffle(cards)
    hands = {p: tuple(cards[i * n_suits:(i + 1) * n_suits]) for i, p in enumerate(players)}
    return Instance(
        players=tuple(players),
        pictures=tuple(pictures),
        n_suits=n_suits,
        deal=InjectionMap.from_hands(n_suits, hands),
    )


def random_sizes(
    seed: int,
    suit_choices: Sequence[int] = SUIT_COUNT_CHOICES,
    max_players: int = 200,
    max_pictures: int = 250,
) -> Tuple[int, int, int]:
    """(n_suits, num_players, num_pictures) with num_players <= num_pictures."""
    rng = SplitMix64(seed ^ MIX_2)
    n = rng.choice(suit_choices)
    players = rng.between(0, max_players)
    pictures = rng.between(players, max(players, max_pictures))
    return n, players, pictures


def seeded_instances(
    first_seed: int,
    count: int,
    suit_choices: Sequence[int] = SUIT_COUNT_CHOICES,
    max_players: int = 200,
    max_pictures: int = 250,
) -> Iterator[Tuple[int, Instance]]:
    for seed in range(first_seed, first_seed + count):
        n, players, pictures = random_sizes(seed, suit_choices, max_players, max_pictures)
        yield seed, generate(players, pictures, n, seed)
