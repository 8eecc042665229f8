"""Observation encoders: the pixel tensor and the symbolic record.

Pixel mode renders a player-centric square viewport into four N x N
intensity planes (float32 in [0, 1]):

  - channel 0: pellets,
  - channel 1: viruses,
  - channel 2: enemy cells and enemy ejected blobs,
  - channel 3: own cells, own ejected blobs, and gridlines (at 0.2).

Rasterization is binary coverage with no anti-aliasing: a pixel is lit iff
its center lies inside the entity circle.  All coverage arithmetic happens
in pixel coordinates with float64 exactly as follows — ``dx = (j + 0.5) -
px``, ``dy = (i + 0.5) - py``, covered iff ``dx*dx + dy*dy <= pr*pr`` —
so an independent per-pixel loop reproduces the planes bit-exactly.

Symbolic mode produces a compact record of the same viewport: arena-level
globals, player status (score, action eligibility), and one entry per
entity whose circle intersects the viewport square, sorted by serial.

The viewport itself is a square centered on the player's mass-weighted
centroid whose side grows with the player's spatial extent so every owned
cell stays inside; worlds flagged ``fully_observable`` pin it to the whole
arena instead.  Area outside the arena renders empty (the viewport is
clipped, never shifted).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import EJECT_COST
from .pellets import PELLET_MASS, PELLET_RADIUS
from .world import (
    PlayerState,
    Vec2,
    VIRUS_MASS,
    VIRUS_RADIUS,
    WorldState,
)

BASE_VIEW = 60.0  # world-units: minimum viewport side
FOV_MARGIN = 1.5  # viewport side per unit of player bounding-circle diameter
GRID_PITCH = 10.0  # world-units between gridlines
GRID_INTENSITY = 0.2

CH_PELLETS = 0
CH_VIRUSES = 1
CH_ENEMIES = 2
CH_SELF = 3


class Viewport(NamedTuple):
    """The square world region an observation covers."""

    center: Vec2
    side: float

    @property
    def x0(self) -> float:
        return self.center.x - self.side / 2.0

    @property
    def y0(self) -> float:
        return self.center.y - self.side / 2.0


@dataclass
class PixelObservation:
    """Four rasterized planes; ``planes`` is float32 with shape (4, N, N)
    (plane-major, the serialization layout)."""

    resolution: int
    planes: np.ndarray
    tick: int
    viewport: Viewport

    def tensor(self) -> np.ndarray:
        """Zero-copy (N, N, 4) channels-last view of the planes."""
        return np.transpose(self.planes, (1, 2, 0))

    def to_bytes(self) -> bytes:
        """Raw little-endian float32 buffer, plane-major (channel, row,
        column) — the wire/bindings serialization."""
        return self.planes.tobytes()


class OverlapRecord(NamedTuple):
    """One entity visible in the viewport (world coordinates; velocity in
    world-units/tick)."""

    kind: str
    serial: int
    x: float
    y: float
    radius: float
    mass: float
    vx: float
    vy: float
    is_self: bool


@dataclass
class SymbolicObservation:
    """Structured observation: global arena info, player status, and the
    entities intersecting the viewport (sorted by serial)."""

    arena: tuple[float, float]
    tick: int
    viewport: Viewport
    score: float
    can_split: bool
    can_eject: bool
    overlap: list[OverlapRecord]

    def to_json(self) -> str:
        payload = {
            "global": {"arena": [self.arena[0], self.arena[1]], "tick": self.tick},
            "player": {
                "viewport": [self.viewport.x0, self.viewport.y0, self.viewport.side],
                "score": self.score,
                "can_split": self.can_split,
                "can_eject": self.can_eject,
            },
            "overlap": [
                {
                    "kind": r.kind,
                    "serial": r.serial,
                    "pos": [r.x, r.y],
                    "radius": r.radius,
                    "mass": r.mass,
                    "vel": [r.vx, r.vy],
                    "self": r.is_self,
                }
                for r in self.overlap
            ],
        }
        return json.dumps(payload, separators=(",", ":"))


def compute_viewport(world: WorldState, player: PlayerState) -> Viewport:
    """The square the player observes.

    Center: mass-weighted centroid of the player's cells.  Side:
    ``max(BASE_VIEW, FOV_MARGIN * d)`` where ``d`` is the diameter of the
    bounding circle (around the centroid) of the player's cell circles —
    with margin 1.5 this strictly contains every owned cell.  Fully
    observable worlds instead use the arena-centered square covering the
    whole arena.
    """
    config = world.config
    if config.fully_observable:
        side = max(config.arena_width, config.arena_height)
        return Viewport(Vec2(config.arena_width / 2.0, config.arena_height / 2.0), side)
    center = player.centroid()
    side = max(BASE_VIEW, FOV_MARGIN * 2.0 * player.max_reach())
    return Viewport(center, side)


def _fill_circle(plane: np.ndarray, px: float, py: float, pr: float) -> None:
    """Set to 1.0 every pixel whose center lies inside the circle given in
    pixel coordinates."""
    n = plane.shape[0]
    j0 = max(0, math.ceil(px - pr - 0.5))
    j1 = min(n - 1, math.floor(px + pr - 0.5))
    if j1 < j0:
        return
    i0 = max(0, math.ceil(py - pr - 0.5))
    i1 = min(n - 1, math.floor(py + pr - 0.5))
    if i1 < i0:
        return
    dx = (np.arange(j0, j1 + 1, dtype=np.float64) + 0.5) - px
    dy = (np.arange(i0, i1 + 1, dtype=np.float64) + 0.5) - py
    mask = dx[None, :] * dx[None, :] + dy[:, None] * dy[:, None] <= pr * pr
    window = plane[i0 : i1 + 1, j0 : j1 + 1]
    window[mask] = 1.0


def _draw_gridlines(plane: np.ndarray, viewport: Viewport, world: WorldState) -> None:
    """Gridlines every GRID_PITCH world-units at low intensity, clipped to
    the arena rectangle."""
    n = plane.shape[0]
    scale = viewport.side / n  # world-units per pixel
    x0 = viewport.x0
    y0 = viewport.y0
    width = world.config.arena_width
    height = world.config.arena_height

    # Pixel index ranges whose centers fall inside the arena.
    i_lo = max(0, math.ceil((0.0 - y0) / scale - 0.5))
    i_hi = min(n - 1, math.floor((height - y0) / scale - 0.5))
    j_lo = max(0, math.ceil((0.0 - x0) / scale - 0.5))
    j_hi = min(n - 1, math.floor((width - x0) / scale - 0.5))
    if i_hi < i_lo or j_hi < j_lo:
        return

    k_first = math.ceil(max(x0, 0.0) / GRID_PITCH)
    k_last = math.floor(min(x0 + viewport.side, width) / GRID_PITCH)
    for k in range(k_first, k_last + 1):
        j = math.floor((k * GRID_PITCH - x0) / scale)
        if 0 <= j < n:
            seg = plane[i_lo : i_hi + 1, j]
            np.maximum(seg, GRID_INTENSITY, out=seg)

    k_first = math.ceil(max(y0, 0.0) / GRID_PITCH)
    k_last = math.floor(min(y0 + viewport.side, height) / GRID_PITCH)
    for k in range(k_first, k_last + 1):
        i = math.floor((k * GRID_PITCH - y0) / scale)
        if 0 <= i < n:
            seg = plane[i, j_lo : j_hi + 1]
            np.maximum(seg, GRID_INTENSITY, out=seg)


def render_pixel_obs(
    world: WorldState, player: PlayerState, resolution: int | None = None
) -> PixelObservation:
    """Rasterize the player's viewport into the four observation planes."""
    n = resolution if resolution is not None else world.config.obs_resolution
    viewport = compute_viewport(world, player)
    planes = np.zeros((4, n, n), dtype=np.float32)
    scale = viewport.side / n
    x0 = viewport.x0
    y0 = viewport.y0

    _draw_gridlines(planes[CH_SELF], viewport, world)

    store = world.pellets
    if store.count:
        pr = PELLET_RADIUS / scale
        xs = store.x_view()
        ys = store.y_view()
        near = (
            (xs > x0 - PELLET_RADIUS)
            & (xs < x0 + viewport.side + PELLET_RADIUS)
            & (ys > y0 - PELLET_RADIUS)
            & (ys < y0 + viewport.side + PELLET_RADIUS)
        )
        plane = planes[CH_PELLETS]
        for x, y in zip(xs[near], ys[near]):
            _fill_circle(plane, (x - x0) / scale, (y - y0) / scale, pr)

    plane = planes[CH_VIRUSES]
    vr = VIRUS_RADIUS / scale
    for virus in world.viruses:
        _fill_circle(plane, (virus.x - x0) / scale, (virus.y - y0) / scale, vr)

    for other in world.players:
        plane = planes[CH_SELF if other.index == player.index else CH_ENEMIES]
        for cell in other.cells:
            _fill_circle(
                plane,
                (cell.x - x0) / scale,
                (cell.y - y0) / scale,
                cell.radius / scale,
            )

    for blob in world.blobs:
        plane = planes[CH_SELF if blob.source_owner == player.index else CH_ENEMIES]
        _fill_circle(
            plane, (blob.x - x0) / scale, (blob.y - y0) / scale, blob.radius / scale
        )

    return PixelObservation(n, planes, world.tick, viewport)


def _intersects_viewport(
    x: float, y: float, r: float, viewport: Viewport
) -> bool:
    """Circle-vs-square intersection test (inclusive on the boundary)."""
    half = viewport.side / 2.0
    cx = viewport.center.x
    cy = viewport.center.y
    nx = min(max(x, cx - half), cx + half)
    ny = min(max(y, cy - half), cy + half)
    dx = x - nx
    dy = y - ny
    return dx * dx + dy * dy <= r * r


def encode_symbolic(world: WorldState, player: PlayerState) -> SymbolicObservation:
    """The structured observation for one player."""
    config = world.config
    viewport = compute_viewport(world, player)
    records: list[OverlapRecord] = []

    store = world.pellets
    if store.count:
        ids = store.id_view()
        xs = store.x_view()
        ys = store.y_view()
        half = viewport.side / 2.0
        nx = np.clip(xs, viewport.center.x - half, viewport.center.x + half)
        ny = np.clip(ys, viewport.center.y - half, viewport.center.y + half)
        dx = xs - nx
        dy = ys - ny
        visible = dx * dx + dy * dy <= PELLET_RADIUS * PELLET_RADIUS
        for idx in np.nonzero(visible)[0]:
            records.append(
                OverlapRecord(
                    "pellet",
                    int(ids[idx]),
                    float(xs[idx]),
                    float(ys[idx]),
                    PELLET_RADIUS,
                    PELLET_MASS,
                    0.0,
                    0.0,
                    False,
                )
            )

    for virus in world.viruses:
        if _intersects_viewport(virus.x, virus.y, VIRUS_RADIUS, viewport):
            records.append(
                OverlapRecord(
                    "virus",
                    virus.serial,
                    virus.x,
                    virus.y,
                    VIRUS_RADIUS,
                    VIRUS_MASS,
                    virus.vx,
                    virus.vy,
                    False,
                )
            )

    for other in world.players:
        is_self = other.index == player.index
        for cell in other.cells:
            if _intersects_viewport(cell.x, cell.y, cell.radius, viewport):
                records.append(
                    OverlapRecord(
                        "cell",
                        cell.serial,
                        cell.x,
                        cell.y,
                        cell.radius,
                        cell.mass,
                        cell.vx,
                        cell.vy,
                        is_self,
                    )
                )

    for blob in world.blobs:
        if _intersects_viewport(blob.x, blob.y, blob.radius, viewport):
            records.append(
                OverlapRecord(
                    "blob",
                    blob.serial,
                    blob.x,
                    blob.y,
                    blob.radius,
                    blob.mass,
                    blob.vx,
                    blob.vy,
                    blob.source_owner == player.index,
                )
            )

    records.sort(key=lambda r: r.serial)

    min_split = 2.0 * config.mass_floor
    can_split = len(player.cells) < config.cell_cap and any(
        c.mass >= min_split for c in player.cells
    )
    eject_threshold = config.mass_floor + EJECT_COST
    can_eject = any(c.mass >= eject_threshold for c in player.cells)

    return SymbolicObservation(
        arena=(config.arena_width, config.arena_height),
        tick=world.tick,
        viewport=viewport,
        score=player.total_mass(),
        can_split=can_split,
        can_eject=can_eject,
        overlap=records,
    )
