from __future__ import annotations

import pytest

from services.pan_division.core import Card, GameTrace, InjectionMap, Infeasible, NotTotal, Round, Phase, TooLarge, new_table
from services.pan_division.division import divide_instance, divide_once_traced
from services.pan_division.engine import run_to_stability
from services.pan_division.generator import generate
from services.pan_division.oracle import (
    ImprovementWatch,
    OracleViolation,
    RelabelError,
    check_game,
    check_injection,
    check_injective,
    enumerate_instances,
    relabel,
    relabel_result,
    trace_stats,
)


def test_check_injective_reports_first_collision():
    assert check_injective({"a": "x", "b": "y"})
    check = check_injective({"a": "x", "b": "x"})
    assert not check
    assert check.witness == ("a", "b")


def test_check_injection_requires_totality():
    with pytest.raises(NotTotal):
        check_injection(InjectionMap(2, {("a", 0): Card("x", 0)}))


@pytest.mark.parametrize(
    "sizes, count",
    [((1, 1, 1), 1), ((1, 2, 2), 12), ((2, 2, 2), 24), ((1, 2, 3), 120), ((2, 3, 2), 360)],
)
def test_enumeration_counts(sizes, count):
    instances = list(enumerate_instances(*sizes))
    assert len(instances) == count
    assert len({tuple(sorted(i.deal.entries.items())) for i in instances}) == count


def test_enumeration_guards():
    with pytest.raises(TooLarge):
        next(enumerate_instances(3, 4, 4))
    with pytest.raises(Infeasible):
        next(enumerate_instances(2, 1, 2))


def test_identity_relabeling_is_equal():
    inst = generate(4, 6, 3, seed=1)
    same = relabel(inst, {p: p for p in inst.players}, {b: b for b in inst.pictures})
    assert same == inst


def test_swapping_two_pictures_renames_deal_images_only():
    inst = generate(3, 5, 2, seed=2)
    swap = {b: b for b in inst.pictures}
    swap["b0"], swap["b1"] = "b1", "b0"
    renamed = relabel(inst, {p: p for p in inst.players}, swap)
    assert renamed.players == inst.players
    assert renamed.pictures == ("b1", "b0") + inst.pictures[2:]
    for slot, card in inst.deal.entries.items():
        assert renamed.deal.entries[slot] == Card(swap[card.picture], card.suit)


def test_relabel_must_be_a_bijection():
    inst = generate(2, 3, 2, seed=0)
    with pytest.raises(RelabelError):
        relabel(inst, {"p0": "q"}, {b: b for b in inst.pictures})
    with pytest.raises(RelabelError):
        relabel(inst, {"p0": "q", "p1": "q"}, {b: b for b in inst.pictures})


def test_relabel_commutes_with_divide():
    inst = generate(12, 15, 4, seed=5)
    players = {p: f"player-{i}" for i, p in enumerate(reversed(inst.players))}
    pictures = {b: f"pic-{i}" for i, b in enumerate(reversed(inst.pictures))}
    result, _ = divide_instance(inst)
    relabeled, _ = divide_instance(relabel(inst, players, pictures))
    assert relabeled == relabel_result(result, players, pictures)


def test_empty_trace_stats_are_zero():
    inst = generate(3, 4, 4, seed=0)
    stats = trace_stats(GameTrace(), inst)
    assert stats.round_pairs_used == 0
    assert all(s.total_touches == 0 and s.hand_changes == 0 for s in stats.players.values())


def test_walkthrough_stats(walkthrough):
    final, trace = run_to_stability(new_table(walkthrough))
    stats = check_game(walkthrough, trace, final=final)
    p0 = stats.players["p0"]
    assert (p0.shape_up_count, p0.ship_out_count, p0.total_touches) == (1, 1, 2)
    assert stats.round_pairs_used == 1


def test_two_player_walkthrough_stats(walkthrough_two_players):
    step = divide_once_traced(walkthrough_two_players.deal)
    stats = check_game(walkthrough_two_players, step.trace, final=step.final, extracted=step.injection)
    p0, p1 = stats.players["p0"], stats.players["p1"]
    assert (p0.shape_up_count, p0.ship_out_count, p0.called_away_count, p0.ship_in_count) == (1, 2, 1, 1)
    assert p0.hand_changes == 3
    assert (p1.ship_out_count, p1.hand_changes) == (1, 1)


def test_card_level_touches_can_exceed_eight_while_hand_changes_stay_bounded(four_way_call):
    step = divide_once_traced(four_way_call.deal)
    stats = check_game(four_way_call, step.trace, final=step.final, extracted=step.injection)
    t = stats.players["T"]
    assert (t.called_away_count, t.ship_in_count, t.ship_out_count) == (4, 4, 3)
    assert t.total_touches == 11
    assert t.hand_changes == 4
    assert stats.max_of("hand_changes") <= 8


def test_check_game_rejects_a_tampered_trace(walkthrough):
    final, trace = run_to_stability(new_table(walkthrough))
    reordered = GameTrace([Round(1, Phase.SHIP_OUT, trace.rounds[1].events), Round(2, Phase.SHAPE_UP, trace.rounds[0].events)])
    with pytest.raises(OracleViolation):
        check_game(walkthrough, reordered)
    with pytest.raises(OracleViolation):
        check_game(walkthrough, GameTrace(trace.rounds[:1]))


def test_called_away_hand_must_improve_within_two_rounds():
    watch = ImprovementWatch()
    watch.called_away("p0", 2, 1)
    watch.observe("p0", 2, 1)
    watch.observe("p0", 2, 2)
    with pytest.raises(OracleViolation) as err:
        watch.observe("p0", 2, 3)
    assert err.value.prop == "improves within two rounds"


def test_called_away_hand_is_released_once_it_improves():
    watch = ImprovementWatch()
    watch.called_away("p0", 0, 1)
    watch.observe("p0", 0, 1)
    watch.observe("p0", 1, 2)
    watch.observe("p0", 1, 5)
    watch.finish()


def test_game_cannot_end_while_a_called_away_hand_waits():
    watch = ImprovementWatch()
    watch.called_away("p1", 1, 4)
    with pytest.raises(OracleViolation):
        watch.finish()


def test_every_shape_up_and_passive_ship_in_improves(walkthrough_two_players, four_way_call):
    for inst in (walkthrough_two_players, four_way_call):
        step = divide_once_traced(inst.deal)
        check_game(inst, step.trace, final=step.final, extracted=step.injection)
