"""
services.pan_division.server

JSON-RPC 2.0 service over the division engine.

Endpoints:
- GET  /.well-known/agent-card.json : capabilities
- GET  /health
- POST /                            : JSON-RPC ingress

Methods (params/results use the codec documents):
- instances/generate : {players, pictures, suits, seed}            -> {instance}
- division/run       : {instance, max_round_pairs?}                 -> {instance, trace, final}
- division/divide    : {instance, max_round_pairs?}                 -> {result, report, trace}
- division/verify    : {instance, claimed, max_round_pairs?}        -> {ok, mismatches, injective}
- division/stats     : {instance, max_round_pairs?}                 -> {stats}
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Dict, Optional

from fastapi import Body, FastAPI, HTTPException

from .codec import (
    instance_from_json,
    instance_to_json,
    reduced_instance,
    result_from_json,
    table_to_json,
    trace_to_lines,
)
from .config import Settings, configure_logging
from .core import DivisionError, EngineError, FormatError, InstanceError, validate_instance
from .division import divide_instance, divide_once_traced
from .generator import generate
from .oracle import check_game, check_injective

Json = Dict[str, Any]

SERVICE_VERSION = "0.1.0"

settings = Settings.from_env()
configure_logging(settings.log_level)
log = logging.getLogger("pan_division.server")

app = FastAPI(title="Pan Galactic Division Service", version=SERVICE_VERSION)


@app.on_event("startup")
async def _startup():
    log.info(
        "division service up (max_round_pairs=%s enumerate_limit=%s)",
        settings.max_round_pairs if settings.max_round_pairs is not None else "2·N·|A|+2",
        settings.enumerate_limit,
    )


@app.get("/.well-known/agent-card.json")
async def agent_card():
    return {
        "name": "pan-division",
        "description": "Deterministic division by N: injection A×N -> B×N to a canonical injection A -> B.",
        "url": settings.service_url,
        "capabilities": sorted(METHODS),
        "protocol": "jsonrpc",
        "version": SERVICE_VERSION,
    }


@app.get("/health")
async def health():
    return {"status": "ok"}


def _cap(params: Json) -> Optional[int]:
    raw = params.get("max_round_pairs", settings.max_round_pairs)
    if raw is None:
        return None
    if not isinstance(raw, int) or isinstance(raw, bool) or raw < 1:
        raise FormatError("max_round_pairs must be a positive integer")
    return raw


def _instance(params: Json):
    return validate_instance(instance_from_json(params.get("instance")))


def _int_param(params: Json, name: str, default: Optional[int] = None) -> int:
    value = params.get(name, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise FormatError(f"{name} must be an integer")
    return value


def rpc_generate(params: Json) -> Json:
    inst = generate(
        _int_param(params, "players"),
        _int_param(params, "pictures"),
        _int_param(params, "suits", 4),
        _int_param(params, "seed", 0),
    )
    return {"instance": instance_to_json(inst)}


def rpc_run(params: Json) -> Json:
    inst = _instance(params)
    step = divide_once_traced(inst.deal, players=inst.players, pictures=inst.pictures, max_round_pairs=_cap(params))
    return {
        "instance": instance_to_json(reduced_instance(inst, step.injection)),
        "trace": trace_to_lines(step.trace),
        "final": table_to_json(step.final),
    }


def rpc_divide(params: Json) -> Json:
    inst = _instance(params)
    result, report = divide_instance(inst, max_round_pairs=_cap(params))
    lines = [line for step in report.steps for line in trace_to_lines(step.trace, n=step.n)]
    return {"result": result, "report": report.to_json(), "trace": lines}


def rpc_verify(params: Json) -> Json:
    inst = _instance(params)
    claimed = result_from_json(params.get("claimed"))
    result, _ = divide_instance(inst, max_round_pairs=_cap(params))
    mismatches = sorted(p for p in set(result) | set(claimed) if result.get(p) != claimed.get(p))
    injective = check_injective(claimed)
    return {
        "ok": not mismatches and injective.ok,
        "mismatches": mismatches,
        "injective": injective.ok,
        "witness": list(injective.witness) if injective.witness else None,
    }


def rpc_stats(params: Json) -> Json:
    inst = _instance(params)
    if inst.n_suits < 2:
        raise InstanceError("stats need at least 2 suits")
    step = divide_once_traced(inst.deal, players=inst.players, pictures=inst.pictures, max_round_pairs=_cap(params))
    stats = check_game(inst, step.trace, final=step.final, extracted=step.injection, max_round_pairs=_cap(params))
    return {"stats": stats.to_json()}


METHODS: Dict[str, Callable[[Json], Json]] = {
    "instances/generate": rpc_generate,
    "division/run": rpc_run,
    "division/divide": rpc_divide,
    "division/verify": rpc_verify,
    "division/stats": rpc_stats,
}


def _error(req_id: Any, code: int, message: str, exc: Optional[Exception] = None) -> Json:
    err: Json = {"code": code, "message": message}
    if exc is not None:
        err["data"] = {"error": type(exc).__name__, "detail": str(exc)}
    return {"jsonrpc": "2.0", "id": req_id, "error": err}


@app.post("/")
async def jsonrpc(payload: Json = Body(...)):
    if payload.get("jsonrpc") != "2.0":
        raise HTTPException(400, "Invalid JSON-RPC")

    method = payload.get("method")
    req_id = payload.get("id")
    handler = METHODS.get(method) if isinstance(method, str) else None
    if handler is None:
        return _error(req_id, -32601, "Method not found")

    params = payload.get("params") or {}
    if not isinstance(params, dict):
        return _error(req_id, -32602, "Invalid params")

    log.info("rpc %s id=%s", method, req_id)
    try:
        result = handler(params)
    except (FormatError, InstanceError) as e:
        return _error(req_id, -32602, "Invalid params", e)
    except EngineError as e:
        log.error("invariant violated in %s: %s", method, e)
        return _error(req_id, -32000, "Internal invariant violated", e)
    except DivisionError as e:
        return _error(req_id, -32000, str(e), e)

    return {"jsonrpc": "2.0", "id": req_id, "result": result}
