"""Vectorized pellet storage.

Pellets are by far the most numerous entity (hundreds per arena) and every
tick asks "which pellets fall inside these circles?".  Storing them as flat
numpy arrays makes that a handful of vectorized operations instead of a
Python loop, which is what keeps full-game throughput in the hundreds of
steps per second.

Invariants maintained by construction:
  - arrays are parallel: ``ids[i], xs[i], ys[i]`` describe one pellet;
  - entries are sorted by id (serials are handed out monotonically and
    removals compress in order), so hashing the raw buffers is canonical;
  - every pellet has mass exactly ``PELLET_MASS``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

PELLET_MASS = 1.0
PELLET_RADIUS = 1.0  # radius_of(PELLET_MASS)


class Pellet(NamedTuple):
    """A single pellet, materialized from the store for APIs that want
    per-entity records (observations, wire snapshots)."""

    serial: int
    x: float
    y: float


class PelletStore:
    """Flat-array pellet container with vectorized queries."""

    __slots__ = ("ids", "xs", "ys", "n")

    def __init__(self, capacity: int = 64) -> None:
        capacity = max(int(capacity), 1)
        self.ids = np.zeros(capacity, dtype=np.int64)
        self.xs = np.zeros(capacity, dtype=np.float64)
        self.ys = np.zeros(capacity, dtype=np.float64)
        self.n = 0

    # -- capacity -----------------------------------------------------------

    def _ensure(self, extra: int) -> None:
        need = self.n + extra
        if need <= self.ids.shape[0]:
            return
        cap = self.ids.shape[0]
        while cap < need:
            cap *= 2
        for name in ("ids", "xs", "ys"):
            old = getattr(self, name)
            grown = np.zeros(cap, dtype=old.dtype)
            grown[: self.n] = old[: self.n]
            setattr(self, name, grown)

    # -- mutation ------------------------------------------------------------

    def add(self, serial: int, x: float, y: float) -> None:
        self._ensure(1)
        self.ids[self.n] = serial
        self.xs[self.n] = x
        self.ys[self.n] = y
        self.n += 1

    def remove_by_mask(self, eaten: np.ndarray) -> None:
        """Drop every pellet where ``eaten`` is True (length == count)."""
        keep = ~eaten
        kept = int(keep.sum())
        if kept == self.n:
            return
        self.ids[:kept] = self.ids[: self.n][keep]
        self.xs[:kept] = self.xs[: self.n][keep]
        self.ys[:kept] = self.ys[: self.n][keep]
        self.n = kept

    # -- queries -------------------------------------------------------------

    @property
    def count(self) -> int:
        return self.n

    def id_view(self) -> np.ndarray:
        return self.ids[: self.n]

    def x_view(self) -> np.ndarray:
        return self.xs[: self.n]

    def y_view(self) -> np.ndarray:
        return self.ys[: self.n]

    def inside_circle(self, cx: float, cy: float, radius: float) -> np.ndarray:
        """Boolean mask of pellets whose centers lie inside the circle."""
        dx = self.xs[: self.n] - cx
        dy = self.ys[: self.n] - cy
        return dx * dx + dy * dy <= radius * radius

    def nearest_index(self, x: float, y: float) -> int:
        """Index of the pellet nearest to (x, y), or -1 when empty."""
        if self.n == 0:
            return -1
        dx = self.xs[: self.n] - x
        dy = self.ys[: self.n] - y
        return int(np.argmin(dx * dx + dy * dy))

    def as_pellets(self) -> list[Pellet]:
        return [
            Pellet(int(self.ids[i]), float(self.xs[i]), float(self.ys[i]))
            for i in range(self.n)
        ]

    def clone(self) -> "PelletStore":
        dup = PelletStore(self.ids.shape[0])
        dup.ids[: self.n] = self.ids[: self.n]
        dup.xs[: self.n] = self.xs[: self.n]
        dup.ys[: self.n] = self.ys[: self.n]
        dup.n = self.n
        return dup

    def hash_bytes(self) -> bytes:
        return (
            self.ids[: self.n].tobytes()
            + self.xs[: self.n].tobytes()
            + self.ys[: self.n].tobytes()
        )
