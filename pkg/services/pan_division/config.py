"""
services.pan_division.config

Environment settings (optionally primed from a .env file) and logging setup
shared by the service and the CLI.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        logging.getLogger("pan_division.config").warning("Ignoring non-integer %s=%r", name, raw)
        return default


@dataclass(frozen=True)
class Settings:
    max_round_pairs: Optional[int] = None
    enumerate_limit: int = 1_000_000
    log_level: str = "INFO"
    service_host: str = "127.0.0.1"
    service_port: int = 8040
    service_url: str = "http://127.0.0.1:8040/"

    @classmethod
    def from_env(cls) -> "Settings":
        port = _env_int("PGD_SERVICE_PORT", 8040) or 8040
        host = os.getenv("PGD_SERVICE_HOST", "127.0.0.1").strip() or "127.0.0.1"
        return cls(
            max_round_pairs=_env_int("PGD_MAX_ROUND_PAIRS", None),
            enumerate_limit=_env_int("PGD_ENUMERATE_LIMIT", 1_000_000) or 1_000_000,
            log_level=(os.getenv("PGD_LOG_LEVEL", "INFO").strip() or "INFO").upper(),
            service_host=host,
            service_port=port,
            service_url=os.getenv("PGD_SERVICE_URL", f"http://{host}:{port}/").strip(),
        )


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)
    # Keep client request lines out of command output
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("httpcore").setLevel(logging.WARNING)
