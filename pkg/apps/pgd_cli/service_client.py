from __future__ import annotations

import uuid
from dataclasses import dataclass
from typing import Any, Dict, Optional

import httpx

from services.pan_division.core import DivisionError

Json = Dict[str, Any]


class ServiceError(DivisionError):
    def __init__(self, error: Json):
        super().__init__(f"service error {error.get('code')}: {error.get('message')}")
        self.code = error.get("code")
        self.data = error.get("data") or {}

    @property
    def error_type(self) -> str:
        return str(self.data.get("error", ""))


@dataclass
class DivisionServiceClient:
    base_url: str
    transport: Optional[httpx.AsyncBaseTransport] = None

    async def call(self, method: str, params: Json, timeout_s: float = 120.0) -> Json:
        rpc = {
            "jsonrpc": "2.0",
            "id": str(uuid.uuid4()),
            "method": method,
            "params": params,
        }
        async with httpx.AsyncClient(timeout=timeout_s, transport=self.transport) as client:
            r = await client.post(self.base_url, json=rpc)
            r.raise_for_status()
            data = r.json()
        if "error" in data:
            raise ServiceError(data["error"])
        return data.get("result") or {}

    async def divide(self, instance: Json, max_round_pairs: Optional[int] = None) -> Json:
        params: Json = {"instance": instance}
        if max_round_pairs is not None:
            params["max_round_pairs"] = max_round_pairs
        return await self.call("division/divide", params)
