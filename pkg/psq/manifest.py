"""Run manifests recording how an index or sweep directory was produced."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from psq import __version__

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file's bytes, read in blocks."""

    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


class RunManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: str = Field(..., min_length=1)
    parameters: dict[str, Any] = Field(default_factory=dict)
    inputs: dict[str, str] = Field(default_factory=dict, description="Input path -> SHA-256")
    version: str = Field(default=__version__)
    created_at: str = Field(
        default_factory=lambda: dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    )

    @classmethod
    def for_inputs(
        cls, command: str, parameters: Mapping[str, Any], inputs: Mapping[str, str | Path]
    ) -> RunManifest:
        """Digest every input file; ``inputs`` maps a role (``"docs"``) to a path."""

        return cls(
            command=command,
            parameters={key: _plain(value) for key, value in parameters.items()},
            inputs={role: file_digest(path) for role, path in sorted(inputs.items())},
        )

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / MANIFEST_NAME
        path.write_text(
            json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return path

    @classmethod
    def read(cls, out_dir: str | Path) -> RunManifest:
        return cls.model_validate_json(
            (Path(out_dir) / MANIFEST_NAME).read_text(encoding="utf-8")
        )


def _plain(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    return value
