"""
services.pan_division.division

Division by N: one game removes one suit (A×k -> B×k becomes A×(k-1) -> B×(k-1)),
and repeating it down to a single suit leaves an injection A -> B.

Each step builds a fresh table from the previous step's extraction; nothing
carries over between steps except the injection itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .codec import trace_digest
from .core import (
    GameTrace,
    InjectionMap,
    Instance,
    InstanceError,
    PictureId,
    PlayerId,
    TableState,
    new_table,
    validate_instance,
)
from .engine import extract, run_to_stability

log = logging.getLogger("pan_division.division")

Json = Dict[str, Any]


@dataclass(frozen=True)
class DivisionStep:
    n: int
    rounds_used: int
    trace_digest: str
    trace: GameTrace = field(default_factory=GameTrace, compare=False, repr=False)

    def to_json(self) -> Json:
        return {"n": self.n, "rounds_used": self.rounds_used, "trace_digest": self.trace_digest}


@dataclass
class DivisionReport:
    steps: List[DivisionStep] = field(default_factory=list)
    result: Dict[PlayerId, PictureId] = field(default_factory=dict)

    def to_json(self) -> Json:
        return {"steps": [s.to_json() for s in self.steps], "result": dict(self.result)}


@dataclass(frozen=True)
class StepResult:
    injection: InjectionMap
    initial: TableState
    final: TableState
    trace: GameTrace


def _checked(f: InjectionMap, players: Optional[Sequence[PlayerId]], pictures: Optional[Sequence[PictureId]]) -> Instance:
    inst = Instance(
        players=tuple(players) if players is not None else f.players(),
        pictures=tuple(pictures) if pictures is not None else f.pictures(),
        n_suits=f.n_indices,
        deal=f,
    )
    return validate_instance(inst)


def divide_once_traced(
    f: InjectionMap,
    *,
    players: Optional[Sequence[PlayerId]] = None,
    pictures: Optional[Sequence[PictureId]] = None,
    max_round_pairs: Optional[int] = None,
) -> StepResult:
    """
    Play one game on the table dealt by f and extract the reduced injection.

    players/pictures fix the declared orders (default: first appearance in f).
    Pictures absent from f's image never take part in a request, so omitting
    them does not change the outcome.
    """
    if f.n_indices < 2:
        raise InstanceError(f"a division step needs at least 2 indices, got {f.n_indices}")
    inst = _checked(f, players, pictures)
    initial = new_table(inst)
    final, trace = run_to_stability(initial, max_round_pairs)
    return StepResult(injection=extract(final), initial=initial, final=final, trace=trace)


def divide_once(f: InjectionMap, **kwargs: Any) -> InjectionMap:
    return divide_once_traced(f, **kwargs).injection


def divide(
    f: InjectionMap,
    *,
    players: Optional[Sequence[PlayerId]] = None,
    pictures: Optional[Sequence[PictureId]] = None,
    max_round_pairs: Optional[int] = None,
) -> Tuple[Dict[PlayerId, PictureId], DivisionReport]:
    inst = _checked(f, players, pictures)
    report = DivisionReport()
    current = f
    while current.n_indices > 1:
        step = divide_once_traced(current, players=inst.players, pictures=inst.pictures, max_round_pairs=max_round_pairs)
        digest = trace_digest(step.trace)
        report.steps.append(DivisionStep(current.n_indices, len(step.trace.rounds), digest, step.trace))
        log.info("step n=%s: %s rounds, digest %s", current.n_indices, len(step.trace.rounds), digest[:12])
        current = step.injection

    report.result = {p: current.entries[(p, 0)].picture for p in inst.players}
    return dict(report.result), report


def divide_instance(inst: Instance, max_round_pairs: Optional[int] = None) -> Tuple[Dict[PlayerId, PictureId], DivisionReport]:
    return divide(inst.deal, players=inst.players, pictures=inst.pictures, max_round_pairs=max_round_pairs)
