"""Audit logging utilities."""

from __future__ import annotations

import logging
import os
from typing import Any

from psq.utils.config import PSQSettings

logger = logging.getLogger("audit")


def configure_logging(settings: PSQSettings) -> None:
    """Install file and console handlers; called once by the command-line entry point."""

    directory = os.path.dirname(settings.log_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s [%(levelname)s] %(message)s",
        handlers=[
            logging.FileHandler(settings.log_path, encoding="utf-8"),
            logging.StreamHandler(),
        ],
        force=True,
    )


def log_event(event: str, metadata: dict[str, Any] | None = None) -> None:
    """Record an audit event with optional metadata."""

    payload = metadata or {}
    logger.info("%s | metadata=%s", event, payload)
