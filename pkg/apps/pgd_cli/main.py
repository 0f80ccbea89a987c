"""
apps.pgd_cli.main

Command-line front end for the division engine.

Verbs:
  generate  seeded instance                         -> --out (instance JSON)
  run       one division step                       -> --out (reduced instance), --trace (JSON lines)
  divide    full division down to A -> B            -> --out (player -> picture), --trace, --report
  verify    re-run and compare a claimed result map -> exit 0 / 1
  stats     trace statistics for one instance or a seed range

Exit codes: 0 ok, 1 invalid instance or claim, 2 malformed input, 3 internal invariant violated.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import httpx

from services.pan_division.codec import (
    describe_event,
    dumps,
    instance_from_json,
    instance_to_json,
    loads,
    reduced_instance,
    result_from_json,
    result_to_json,
    trace_to_lines,
)
from services.pan_division.config import Settings, configure_logging
from services.pan_division.core import EngineError, FormatError, Instance, InstanceError, validate_instance
from services.pan_division.division import divide_instance, divide_once_traced
from services.pan_division.generator import generate
from services.pan_division.oracle import TraceStats, check_game, check_injective

from .service_client import DivisionServiceClient, ServiceError

log = logging.getLogger("pgd_cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MALFORMED = 2
EXIT_INTERNAL = 3

MODES = ("generate", "run", "divide", "verify", "stats")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    input_path: Optional[Path] = None
    num_players: Optional[int] = None
    num_pictures: Optional[int] = None
    n_suits: int = 4
    seed: int = 0
    out: Optional[Path] = None
    trace: Optional[Path] = None
    report: Optional[Path] = None
    claimed: Optional[Path] = None
    max_round_pairs: Optional[int] = None
    count: int = 1
    jobs: int = 1
    remote: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace, settings: Settings) -> "RunConfig":
        remote = args.remote
        if remote == "":
            remote = settings.service_url
        return cls(
            mode=args.mode,
            input_path=args.input_path,
            num_players=args.players,
            num_pictures=args.pictures,
            n_suits=args.suits,
            seed=args.seed,
            out=args.out,
            trace=args.trace,
            report=args.report,
            claimed=args.claimed,
            max_round_pairs=_round_pair_cap(args.max_round_pairs if args.max_round_pairs is not None else settings.max_round_pairs),
            count=args.count,
            jobs=args.jobs,
            remote=remote,
        )


def _round_pair_cap(value: Optional[int]) -> Optional[int]:
    if value is not None and value < 1:
        raise FormatError(f"--max-round-pairs must be a positive integer, got {value}")
    return value


class ClaimRejected(Exception):
    pass


# -----------------------
# I/O
# -----------------------


def _read_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise FormatError(f"cannot read {path}: {e}") from None
    return loads(text)


def _write_text(path: Optional[Path], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    log.info("wrote %s", path)


def _write_lines(path: Optional[Path], lines: Iterable[str]) -> None:
    if path is not None:
        _write_text(path, "".join(line + "\n" for line in lines))


def load_instance(cfg: RunConfig) -> Instance:
    if cfg.input_path is not None:
        return validate_instance(instance_from_json(_read_json(cfg.input_path)))
    if cfg.num_players is None or cfg.num_pictures is None:
        raise FormatError("either --in or both --players and --pictures are required")
    return generate(cfg.num_players, cfg.num_pictures, cfg.n_suits, cfg.seed)


# -----------------------
# Commands
# -----------------------


def cmd_generate(cfg: RunConfig) -> int:
    if cfg.num_players is None or cfg.num_pictures is None:
        raise FormatError("generate needs --players and --pictures")
    inst = generate(cfg.num_players, cfg.num_pictures, cfg.n_suits, cfg.seed)
    _write_text(cfg.out, dumps(instance_to_json(inst)))
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    inst = load_instance(cfg)
    step = divide_once_traced(inst.deal, players=inst.players, pictures=inst.pictures, max_round_pairs=cfg.max_round_pairs)
    for rnd in step.trace.rounds:
        for ev in rnd.events:
            log.info("round %s %s: %s", rnd.index, ev.player, describe_event(ev, inst.n_suits))
    _write_lines(cfg.trace, trace_to_lines(step.trace))
    _write_text(cfg.out, dumps(instance_to_json(reduced_instance(inst, step.injection))))
    return EXIT_OK


def _divide_local(inst: Instance, cfg: RunConfig) -> Tuple[Dict[str, str], Dict[str, Any], List[str]]:
    result, report = divide_instance(inst, max_round_pairs=cfg.max_round_pairs)
    lines = [line for step in report.steps for line in trace_to_lines(step.trace, n=step.n)]
    return result, report.to_json(), lines


def _service_client(url: str) -> DivisionServiceClient:
    return DivisionServiceClient(url)


def _divide_remote(inst: Instance, cfg: RunConfig) -> Tuple[Dict[str, str], Dict[str, Any], List[str]]:
    log.info("dividing on %s", cfg.remote)
    answer = asyncio.run(_service_client(cfg.remote).divide(instance_to_json(inst), cfg.max_round_pairs))
    return result_from_json(answer.get("result")), answer.get("report") or {}, list(answer.get("trace") or [])


def cmd_divide(cfg: RunConfig) -> int:
    inst = load_instance(cfg)
    result, report, lines = _divide_remote(inst, cfg) if cfg.remote else _divide_local(inst, cfg)
    check = check_injective(result)
    if not check:
        raise EngineError(f"division result is not injective: {check.witness}")
    log.info("%s players divided in %s steps", len(result), len(report.get("steps", [])))
    _write_lines(cfg.trace, lines)
    if cfg.report is not None:
        _write_text(cfg.report, dumps(report))
    _write_text(cfg.out, dumps(result_to_json(result)))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.claimed is None:
        raise FormatError("verify needs --claimed")
    inst = load_instance(cfg)
    claimed = result_from_json(_read_json(cfg.claimed))
    result, _ = divide_instance(inst, max_round_pairs=cfg.max_round_pairs)

    check = check_injective(claimed)
    if not check:
        raise ClaimRejected(f"claimed map is not injective: {check.witness[0]!r} and {check.witness[1]!r} collide")
    for player in list(inst.players) + [p for p in claimed if p not in result]:
        if result.get(player) != claimed.get(player):
            raise ClaimRejected(f"claimed {claimed.get(player)!r} for {player!r}, division gives {result.get(player)!r}")
    sys.stdout.write("ok\n")
    return EXIT_OK


def _stats_for(inst: Instance, max_round_pairs: Optional[int]) -> TraceStats:
    if inst.n_suits < 2:
        return TraceStats(players={})
    step = divide_once_traced(inst.deal, players=inst.players, pictures=inst.pictures, max_round_pairs=max_round_pairs)
    return check_game(inst, step.trace, final=step.final, extracted=step.injection, max_round_pairs=max_round_pairs)


def _stats_for_seed(job: Tuple[int, int, int, int, Optional[int]]) -> Tuple[int, int, int, int, int, int]:
    players, pictures, suits, seed, cap = job
    stats = _stats_for(generate(players, pictures, suits, seed), cap)
    return (
        seed,
        stats.round_pairs_used,
        stats.max_of("total_touches"),
        stats.max_of("hand_changes"),
        stats.max_of("shape_up_count"),
        stats.max_of("ship_out_count"),
    )


def cmd_stats(cfg: RunConfig) -> int:
    header = "seed  round_pairs  max_touches  max_hand_changes  max_shape_ups  max_ship_outs"
    if cfg.input_path is not None:
        stats = _stats_for(load_instance(cfg), cfg.max_round_pairs)
        sys.stdout.write(json.dumps(stats.to_json(), ensure_ascii=False, indent=2) + "\n")
        return EXIT_OK

    if cfg.num_players is None or cfg.num_pictures is None:
        raise FormatError("stats needs --in or --players and --pictures")
    jobs = [(cfg.num_players, cfg.num_pictures, cfg.n_suits, s, cfg.max_round_pairs) for s in range(cfg.seed, cfg.seed + cfg.count)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_stats_for_seed, jobs))
    else:
        rows = [_stats_for_seed(job) for job in jobs]

    lines = [header] + [f"{r[0]:>4}  {r[1]:>11}  {r[2]:>11}  {r[3]:>16}  {r[4]:>13}  {r[5]:>13}" for r in rows]
    if rows:
        lines.append(
            f"max   {max(r[1] for r in rows):>11}  {max(r[2] for r in rows):>11}  "
            f"{max(r[3] for r in rows):>16}  {max(r[4] for r in rows):>13}  {max(r[5] for r in rows):>13}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "divide": cmd_divide,
    "verify": cmd_verify,
    "stats": cmd_stats,
}


# -----------------------
# Entry point
# -----------------------


def _parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="pgd", description="Division by N on finite injections.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--in", dest="input_path", type=Path, help="Instance JSON file")
    parser.add_argument("--out", type=Path, help="Result file (default: stdout)")
    parser.add_argument("--trace", type=Path, help="Trace file, one JSON object per round")
    parser.add_argument("--report", type=Path, help="Division report JSON (divide)")
    parser.add_argument("--claimed", type=Path, help="Claimed player -> picture map (verify)")
    parser.add_argument("--players", type=int, help="Number of players to generate")
    parser.add_argument("--pictures", type=int, help="Number of pictures to generate")
    parser.add_argument("--suits", type=int, default=4, help="Suit count N (default: 4)")
    parser.add_argument("--seed", type=int, default=0, help="Generator seed (default: 0)")
    parser.add_argument("--count", type=int, default=1, help="Seeds to run from --seed (stats)")
    parser.add_argument("--max-round-pairs", type=int, help="Round-pair cap (default: 2·N·|A|+2)")
    parser.add_argument("--jobs", type=int, default=1, help="Worker processes for stats")
    parser.add_argument("--remote", nargs="?", const="", help="Divide on the JSON-RPC service (default URL from PGD_SERVICE_URL)")
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parse_args(argv)
    settings = Settings.from_env()
    configure_logging(settings.log_level)
    try:
        cfg = RunConfig.from_args(args, settings)
        log.info("%s", cfg.mode)
        return COMMANDS[cfg.mode](cfg)
    except ClaimRejected as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ServiceError as e:
        print(f"error: {e} {e.data}", file=sys.stderr)
        if e.error_type == "FormatError":
            return EXIT_MALFORMED
        return EXIT_INVALID if e.code == -32602 else EXIT_INTERNAL
    except httpx.HTTPError as e:
        print(f"error: service call failed: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except FormatError as e:
        print(f"error: malformed input: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except InstanceError as e:
        print(f"error: invalid instance: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except EngineError as e:
        print(f"error: internal invariant violated: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
