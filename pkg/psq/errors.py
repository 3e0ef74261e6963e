"""Exception types shared by the readers, the index format and the sweep runner."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from psq.pruning import PruningConfig


class ParseError(ValueError):
    """Malformed line in one of the text formats the toolkit reads."""

    def __init__(self, message: str, path: str | None = None, line_number: int | None = None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}:"
        if line_number is not None:
            location = f"{location}line {line_number}: "
        elif location:
            location = f"{location} "
        super().__init__(f"{location}{message}")


class IndexFormatError(ValueError):
    """The binary index is truncated, corrupt or has the wrong magic bytes."""


class SweepCellError(RuntimeError):
    """A grid cell failed to build or evaluate; the sweep is aborted."""

    def __init__(self, config: PruningConfig, cause: BaseException):
        self.config = config
        super().__init__(f"sweep cell {config.label} failed: {cause}")
