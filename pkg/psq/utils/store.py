"""Result store shared by sweep workers."""

from __future__ import annotations

import threading
from typing import Generic, TypeVar

Item = TypeVar("Item")
GridKey = tuple[int, int, int]


class SweepPointStore(Generic[Item]):
    """Thread-safe in-memory store keyed by grid coordinates.

    Workers finish in any order; reading back through :meth:`ordered` always yields
    results in grid order, so sweep output does not depend on scheduling.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._items: dict[GridKey, Item] = {}

    def save(self, key: GridKey, item: Item) -> None:
        """Record the result for one grid cell; a cell may only be written once."""

        with self._lock:
            if key in self._items:
                raise ValueError(f"grid cell {key} already has a result")
            self._items[key] = item

    def ordered(self) -> list[Item]:
        """All results sorted by grid coordinates."""

        with self._lock:
            return [self._items[key] for key in sorted(self._items)]

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)
