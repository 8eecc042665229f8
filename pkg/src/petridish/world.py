"""Core world model: entities, configuration, construction, determinism.

Goals
  - One authoritative ``WorldState`` object holding every entity, the tick
    counter, and the world's RNG stream; everything downstream (dynamics,
    observations, the env wrapper) mutates or reads this one structure.
  - Bit-level determinism: identical ``(config, seed)`` gives bit-identical
    worlds, and ``state_hash`` digests exact float bit patterns so replay
    tests can compare whole trajectories cheaply.

Non-goals
  - No game rules here (see ``dynamics``), no rendering (see
    ``observation``), no networking.

Units
  - Positions and radii are world-units; the arena is the axis-aligned box
    ``[0, arena_width] x [0, arena_height]``.
  - ``speed_of`` returns world-units per *second*; per-tick displacement is
    ``speed_of(mass) / TICKS_PER_SECOND``.  Velocity fields on entities are
    stored in world-units per *tick*.

Randomness
  - One stream per world: a 64-bit counter-based Philox generator seeded
    from ``config.seed`` (splittable via ``numpy.random.SeedSequence`` for
    per-episode reseeding).  Draw sites run in a fixed, documented order:
    construction draws viruses, then pellets, then player spawns (two
    uniforms per candidate point, x then y); each tick draws regeneration
    first, then respawns; actuation noise is drawn from the same stream by
    the env layer before the ticks of an env step (see ``dynamics`` and
    ``env`` for the per-tick order).
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, WorldConstructionError
from .pellets import PELLET_RADIUS, PelletStore

TICKS_PER_SECOND = 60
VIRUS_MASS = 100.0
VIRUS_RADIUS = 10.0  # radius_of(VIRUS_MASS)
PLACEMENT_RETRIES = 64


class Vec2(NamedTuple):
    """A point or direction in world units."""

    x: float
    y: float


class EntityId(NamedTuple):
    """Identity of any entity: its kind plus a world-unique serial."""

    kind: str
    serial: int


class PlayerSpec(NamedTuple):
    """Static description of one player slot in a world.

    ``bot_kind`` is ``None`` for the learning agent, otherwise one of the
    heuristic policies in :mod:`petridish.bots`.  ``initial_mass`` of
    ``None`` means "use the config-wide initial mass".
    """

    bot_kind: Optional[str] = None
    initial_mass: Optional[float] = None


class Cell:
    """One player-controlled circle.

    ``velocity`` records the realized displacement of the previous tick in
    world-units/tick (cursor seek plus residual impulse); ``impulse`` is the
    residual split/fling boost, also world-units/tick, decayed each tick.
    """

    __slots__ = (
        "serial",
        "owner",
        "mass",
        "x",
        "y",
        "vx",
        "vy",
        "ix",
        "iy",
        "merge_ready_tick",
        "created_tick",
    )

    def __init__(
        self,
        serial: int,
        owner: int,
        mass: float,
        x: float,
        y: float,
        vx: float = 0.0,
        vy: float = 0.0,
        ix: float = 0.0,
        iy: float = 0.0,
        merge_ready_tick: int = 0,
        created_tick: int = 0,
    ) -> None:
        self.serial = serial
        self.owner = owner
        self.mass = mass
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.ix = ix
        self.iy = iy
        self.merge_ready_tick = merge_ready_tick
        self.created_tick = created_tick

    @property
    def id(self) -> EntityId:
        return EntityId("cell", self.serial)

    @property
    def radius(self) -> float:
        return math.sqrt(self.mass)

    def copy(self) -> "Cell":
        return Cell(
            self.serial,
            self.owner,
            self.mass,
            self.x,
            self.y,
            self.vx,
            self.vy,
            self.ix,
            self.iy,
            self.merge_ready_tick,
            self.created_tick,
        )

    def __repr__(self) -> str:  # debugging aid only
        return (
            f"Cell(serial={self.serial}, owner={self.owner}, "
            f"mass={self.mass:.3f}, x={self.x:.2f}, y={self.y:.2f})"
        )


class Virus:
    """A hazard circle of fixed mass 100.

    ``fdx, fdy`` remember the unit direction of the most recent feeding so
    the seventh feed can launch the virus along it.
    """

    __slots__ = ("serial", "x", "y", "vx", "vy", "feed_count", "fdx", "fdy")

    def __init__(
        self,
        serial: int,
        x: float,
        y: float,
        vx: float = 0.0,
        vy: float = 0.0,
        feed_count: int = 0,
        fdx: float = 0.0,
        fdy: float = 0.0,
    ) -> None:
        self.serial = serial
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.feed_count = feed_count
        self.fdx = fdx
        self.fdy = fdy

    @property
    def id(self) -> EntityId:
        return EntityId("virus", self.serial)

    def copy(self) -> "Virus":
        return Virus(
            self.serial,
            self.x,
            self.y,
            self.vx,
            self.vy,
            self.feed_count,
            self.fdx,
            self.fdy,
        )

    def __repr__(self) -> str:
        return (
            f"Virus(serial={self.serial}, x={self.x:.2f}, y={self.y:.2f}, "
            f"feed_count={self.feed_count})"
        )


class EjectedBlob:
    """A lump of ejected mass in flight (or at rest) until eaten."""

    __slots__ = ("serial", "x", "y", "vx", "vy", "mass", "source_owner")

    def __init__(
        self,
        serial: int,
        x: float,
        y: float,
        vx: float,
        vy: float,
        mass: float,
        source_owner: int,
    ) -> None:
        self.serial = serial
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.mass = mass
        self.source_owner = source_owner

    @property
    def id(self) -> EntityId:
        return EntityId("blob", self.serial)

    @property
    def radius(self) -> float:
        return math.sqrt(self.mass)

    def copy(self) -> "EjectedBlob":
        return EjectedBlob(
            self.serial, self.x, self.y, self.vx, self.vy, self.mass, self.source_owner
        )


class PlayerState:
    """Per-player mutable state: cells plus penalty bookkeeping."""

    __slots__ = (
        "index",
        "cells",
        "virus_eat_streak",
        "last_virus_eat_tick",
        "decay_multiplier",
        "lifetime_deaths",
        "is_learning_agent",
        "bot_kind",
        "initial_mass",
    )

    def __init__(
        self,
        index: int,
        cells: list[Cell],
        bot_kind: Optional[str],
        initial_mass: float,
    ) -> None:
        self.index = index
        self.cells = cells
        self.virus_eat_streak = 0
        self.last_virus_eat_tick = -(10**9)
        self.decay_multiplier = 1.0
        self.lifetime_deaths = 0
        self.is_learning_agent = bot_kind is None
        self.bot_kind = bot_kind
        self.initial_mass = initial_mass

    def total_mass(self) -> float:
        return sum(c.mass for c in self.cells)

    def centroid(self) -> Vec2:
        """Mass-weighted center of the player's cells."""
        total = 0.0
        sx = 0.0
        sy = 0.0
        for c in self.cells:
            total += c.mass
            sx += c.mass * c.x
            sy += c.mass * c.y
        return Vec2(sx / total, sy / total)

    def max_reach(self) -> float:
        """Largest distance from the centroid to any cell rim."""
        cx, cy = self.centroid()
        best = 0.0
        for c in self.cells:
            d = math.hypot(c.x - cx, c.y - cy) + c.radius
            if d > best:
                best = d
        return best

    def copy(self) -> "PlayerState":
        dup = PlayerState(
            self.index, [c.copy() for c in self.cells], self.bot_kind, self.initial_mass
        )
        dup.virus_eat_streak = self.virus_eat_streak
        dup.last_virus_eat_tick = self.last_virus_eat_tick
        dup.decay_multiplier = self.decay_multiplier
        dup.lifetime_deaths = self.lifetime_deaths
        return dup


@dataclass(frozen=True)
class WorldConfig:
    """Complete static description of a world.

    The first block mirrors the tunable game constants; the second block
    describes layout (who plays, where things start).  Everything is frozen
    so a config can be hashed, serialized, and reused safely.
    """

    arena_width: float = 350.0
    arena_height: float = 350.0
    max_pellets: int = 500
    pellet_regen_interval: int = 600
    min_viruses: int = 10
    decay_rate: float = 0.002  # fraction of mass lost per decay application
    decay_interval: int = 60  # ticks between decay applications
    initial_mass: float = 25.0
    mass_floor: float = 25.0
    cell_cap: int = 14
    virus_split_feeds: int = 7
    pellet_placement: str = "uniform"  # or "square_path"
    mass_decay_enabled: bool = True
    virus_regen_enabled: bool = True
    noise_std: float = 1.0
    obs_resolution: int = 128
    seed: int = 0
    # Layout ----------------------------------------------------------------
    virus_regen_interval: int = 1  # ticks between virus top-ups
    fully_observable: bool = False  # viewport pinned to the whole arena
    players: tuple[PlayerSpec, ...] = (PlayerSpec(),)
    start_positions: Optional[tuple[Optional[tuple[float, float]], ...]] = None
    virus_layout: str = "uniform"  # or "line"
    # Square-path geometry (pellet_placement == "square_path"): pellets live
    # in the band between the two concentric squares centered on the arena.
    # The inner square clears the largest starting cell (mass 1000, radius
    # ~31.6) so a center-started player only reaches pellets by moving.
    path_inner_half: float = 40.0
    path_outer_half: float = 70.0

    def validate(self) -> None:
        if self.arena_width <= 0 or self.arena_height <= 0:
            raise ConfigError("arena dimensions must be positive")
        for name in ("max_pellets", "pellet_regen_interval", "min_viruses",
                     "decay_interval", "cell_cap", "virus_split_feeds",
                     "virus_regen_interval"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.pellet_regen_interval > 0 and self.decay_interval > 0:
            if self.pellet_regen_interval % self.decay_interval != 0:
                raise ConfigError(
                    "decay_interval must divide pellet_regen_interval "
                    f"({self.decay_interval} does not divide {self.pellet_regen_interval})"
                )
        if self.obs_resolution < 16:
            raise ConfigError("obs_resolution must be at least 16")
        if self.pellet_placement not in ("uniform", "square_path"):
            raise ConfigError(f"unknown pellet_placement {self.pellet_placement!r}")
        if self.virus_layout not in ("uniform", "line"):
            raise ConfigError(f"unknown virus_layout {self.virus_layout!r}")
        if self.mass_floor <= 0 or self.initial_mass < self.mass_floor:
            raise ConfigError("initial_mass must be >= mass_floor > 0")
        for spec in self.players:
            if spec.initial_mass is not None and spec.initial_mass < self.mass_floor:
                raise ConfigError("per-player initial_mass must be >= mass_floor")
        if self.start_positions is not None and len(self.start_positions) != len(self.players):
            raise ConfigError("start_positions length must match players length")
        if self.pellet_placement == "square_path":
            if not 0 < self.path_inner_half < self.path_outer_half:
                raise ConfigError("square path requires 0 < inner half-side < outer half-side")
            if 2 * self.path_outer_half > min(self.arena_width, self.arena_height):
                raise ConfigError("square path does not fit in the arena")

    def digest(self) -> str:
        """Stable 16-hex-digit digest of the config (JSON-canonical)."""
        payload = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


class WorldState:
    """The complete authoritative simulation state at one tick.

    Single-writer: all mutation happens on one logical thread.  Distinct
    instances are fully independent.
    """

    __slots__ = (
        "config",
        "tick",
        "players",
        "pellets",
        "viruses",
        "blobs",
        "rng",
        "id_counter",
    )

    def __init__(
        self,
        config: WorldConfig,
        tick: int,
        players: list[PlayerState],
        pellets: PelletStore,
        viruses: list[Virus],
        blobs: list[EjectedBlob],
        rng: np.random.Generator,
        id_counter: int,
    ) -> None:
        self.config = config
        self.tick = tick
        self.players = players
        self.pellets = pellets
        self.viruses = viruses
        self.blobs = blobs
        self.rng = rng
        self.id_counter = id_counter

    def next_serial(self) -> int:
        serial = self.id_counter
        self.id_counter += 1
        return serial

    def all_cells(self) -> Iterator[Cell]:
        for player in self.players:
            yield from player.cells

    def total_cell_mass(self) -> float:
        return sum(c.mass for c in self.all_cells())

    def clone(self) -> "WorldState":
        rng = np.random.Generator(np.random.Philox())
        rng.bit_generator.state = _copy_rng_state(self.rng.bit_generator.state)
        return WorldState(
            self.config,
            self.tick,
            [p.copy() for p in self.players],
            self.pellets.clone(),
            [v.copy() for v in self.viruses],
            [b.copy() for b in self.blobs],
            rng,
            self.id_counter,
        )


def _copy_rng_state(state: dict) -> dict:
    out = {}
    for key, value in state.items():
        if isinstance(value, dict):
            out[key] = _copy_rng_state(value)
        elif isinstance(value, np.ndarray):
            out[key] = value.copy()
        else:
            out[key] = value
    return out


# -- geometric / kinematic laws ----------------------------------------------


def radius_of(mass: float) -> float:
    """Circle radius for a given mass (area proportional to mass)."""
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    return math.sqrt(mass)


def speed_of(mass: float) -> float:
    """Base speed in world-units/second for a cell of the given mass."""
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    return 100.0 / mass**0.439


# -- construction -------------------------------------------------------------


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """The world RNG: Philox (64-bit counter-based) seeded via SeedSequence.

    ``stream`` selects an independent child stream for the same base seed
    (used for per-episode reseeding without correlations).
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,) if stream else ())
    return np.random.Generator(np.random.Philox(ss))


def _uniform_point(
    rng: np.random.Generator, margin: float, width: float, height: float
) -> tuple[float, float]:
    """One candidate point, margin away from every wall; two draws (x, y)."""
    lo_x, hi_x = margin, width - margin
    lo_y, hi_y = margin, height - margin
    if hi_x < lo_x or hi_y < lo_y:
        raise WorldConstructionError(
            f"arena {width}x{height} cannot fit a circle of radius {margin}"
        )
    x = lo_x + (hi_x - lo_x) * rng.random()
    y = lo_y + (hi_y - lo_y) * rng.random()
    return x, y


def _square_path_point(
    rng: np.random.Generator, config: WorldConfig
) -> tuple[float, float]:
    """Uniform point in the square ring (band between concentric squares).

    The band is split into four congruent rectangles (top, bottom, left,
    right); one is picked uniformly (equal areas), then a uniform point is
    drawn inside it.  Three draws per candidate (side, x, y).
    """
    cx = config.arena_width / 2.0
    cy = config.arena_height / 2.0
    inner = config.path_inner_half
    outer = config.path_outer_half
    side = int(rng.integers(0, 4))
    u = rng.random()
    v = rng.random()
    if side == 0:  # top band, full outer width
        x = cx - outer + 2 * outer * u
        y = cy - outer + (outer - inner) * v
    elif side == 1:  # bottom band, full outer width
        x = cx - outer + 2 * outer * u
        y = cy + inner + (outer - inner) * v
    elif side == 2:  # left band, inner height
        x = cx - outer + (outer - inner) * u
        y = cy - inner + 2 * inner * v
    else:  # right band, inner height
        x = cx + inner + (outer - inner) * u
        y = cy - inner + 2 * inner * v
    return x, y


def _sample_pellet_point(
    rng: np.random.Generator, config: WorldConfig, viruses: Sequence[Virus]
) -> tuple[float, float]:
    """Pellet placement: per config, rejected against virus overlap."""
    for _ in range(PLACEMENT_RETRIES):
        if config.pellet_placement == "square_path":
            x, y = _square_path_point(rng, config)
        else:
            x, y = _uniform_point(
                rng, PELLET_RADIUS, config.arena_width, config.arena_height
            )
        if not _overlaps_virus(x, y, PELLET_RADIUS, viruses):
            return x, y
    raise WorldConstructionError("no pellet position clear of viruses found")


def _overlaps_virus(x: float, y: float, r: float, viruses: Sequence[Virus]) -> bool:
    limit_base = r + VIRUS_RADIUS
    for v in viruses:
        dx = v.x - x
        dy = v.y - y
        if dx * dx + dy * dy < limit_base * limit_base:
            return True
    return False


def _overlaps_cell(x: float, y: float, r: float, cells: Sequence[Cell]) -> bool:
    for c in cells:
        limit = r + c.radius
        dx = c.x - x
        dy = c.y - y
        if dx * dx + dy * dy < limit * limit:
            return True
    return False


def _line_virus_positions(config: WorldConfig) -> list[tuple[float, float]]:
    """Evenly spaced viruses along the vertical midline of the arena,
    forming a wall between the left and right halves."""
    n = config.min_viruses
    x = config.arena_width / 2.0
    return [
        (x, config.arena_height * (i + 1) / (n + 1))
        for i in range(n)
    ]


def create_world(config: WorldConfig) -> WorldState:
    """Build a tick-0 world.  Identical (config, seed) → bit-identical world.

    Construction draw order: viruses, then pellets, then player spawns.
    """
    config.validate()
    rng = make_rng(config.seed)
    id_counter = 1

    viruses: list[Virus] = []
    if config.virus_layout == "line":
        for x, y in _line_virus_positions(config):
            viruses.append(Virus(id_counter, x, y))
            id_counter += 1
    else:
        for _ in range(config.min_viruses):
            for _ in range(PLACEMENT_RETRIES):
                x, y = _uniform_point(
                    rng, VIRUS_RADIUS, config.arena_width, config.arena_height
                )
                if not _overlaps_virus(x, y, VIRUS_RADIUS, viruses):
                    break
            else:
                raise WorldConstructionError(
                    f"could not place virus {len(viruses) + 1} of "
                    f"{config.min_viruses} without overlap"
                )
            viruses.append(Virus(id_counter, x, y))
            id_counter += 1

    pellets = PelletStore(max(config.max_pellets, 64))
    for _ in range(config.max_pellets):
        x, y = _sample_pellet_point(rng, config, viruses)
        pellets.add(id_counter, x, y)
        id_counter += 1

    players: list[PlayerState] = []
    placed_cells: list[Cell] = []
    for index, spec in enumerate(config.players):
        mass = spec.initial_mass if spec.initial_mass is not None else config.initial_mass
        r = radius_of(mass)
        fixed = None if config.start_positions is None else config.start_positions[index]
        if fixed is not None:
            x, y = fixed
        else:
            for _ in range(PLACEMENT_RETRIES):
                x, y = _uniform_point(rng, r, config.arena_width, config.arena_height)
                if not _overlaps_cell(x, y, r, placed_cells) and not _overlaps_virus(
                    x, y, r, viruses
                ):
                    break
            else:
                raise WorldConstructionError(
                    f"could not place player {index} without overlap"
                )
        cell = Cell(id_counter, index, mass, x, y)
        id_counter += 1
        placed_cells.append(cell)
        players.append(PlayerState(index, [cell], spec.bot_kind, mass))

    return WorldState(config, 0, players, pellets, viruses, [], rng, id_counter)


def respawn_position(world: WorldState, mass: Optional[float] = None) -> Vec2:
    """A spawn point for a fresh cell of the given mass (default: initial).

    Uniform rejection sampling against cells of mass > mass_floor and
    viruses; after PLACEMENT_RETRIES failures, the candidate with maximal
    clearance is returned instead of failing.
    """
    config = world.config
    if mass is None:
        mass = config.initial_mass
    r = radius_of(mass)
    obstacles: list[tuple[float, float, float]] = [
        (c.x, c.y, c.radius)
        for c in world.all_cells()
        if c.mass > config.mass_floor
    ]
    obstacles.extend((v.x, v.y, VIRUS_RADIUS) for v in world.viruses)

    best: tuple[float, float] | None = None
    best_clearance = -math.inf
    for _ in range(PLACEMENT_RETRIES):
        x, y = _uniform_point(world.rng, r, config.arena_width, config.arena_height)
        clearance = math.inf
        for ox, oy, orad in obstacles:
            c = math.hypot(ox - x, oy - y) - orad - r
            if c < clearance:
                clearance = c
        if clearance >= 0 or not obstacles:
            return Vec2(x, y)
        if clearance > best_clearance:
            best_clearance = clearance
            best = (x, y)
    assert best is not None
    return Vec2(best[0], best[1])


# -- hashing -------------------------------------------------------------------

_PACK_HEADER = struct.Struct("<qq")
_PACK_PLAYER = struct.Struct("<qqqqd")
_PACK_CELL = struct.Struct("<qqdddddddqq")
_PACK_VIRUS = struct.Struct("<qddddqdd")
_PACK_BLOB = struct.Struct("<qqddddd")


def state_hash(world: WorldState) -> int:
    """64-bit digest of the complete world state.

    Canonical serialization: config digest, tick and id counter, players by
    index (cells by serial), pellet arrays (id-sorted), viruses and blobs by
    serial.  Floats are serialized as exact IEEE-754 bit patterns, so equal
    digests mean bit-identical states.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(bytes.fromhex(world.config.digest()))
    h.update(_PACK_HEADER.pack(world.tick, world.id_counter))
    for player in world.players:
        h.update(
            _PACK_PLAYER.pack(
                player.index,
                player.lifetime_deaths,
                player.virus_eat_streak,
                player.last_virus_eat_tick,
                player.decay_multiplier,
            )
        )
        for cell in sorted(player.cells, key=lambda c: c.serial):
            h.update(
                _PACK_CELL.pack(
                    cell.serial,
                    cell.owner,
                    cell.mass,
                    cell.x,
                    cell.y,
                    cell.vx,
                    cell.vy,
                    cell.ix,
                    cell.iy,
                    cell.merge_ready_tick,
                    cell.created_tick,
                )
            )
    h.update(world.pellets.hash_bytes())
    for virus in sorted(world.viruses, key=lambda v: v.serial):
        h.update(
            _PACK_VIRUS.pack(
                virus.serial,
                virus.x,
                virus.y,
                virus.vx,
                virus.vy,
                virus.feed_count,
                virus.fdx,
                virus.fdy,
            )
        )
    for blob in sorted(world.blobs, key=lambda b: b.serial):
        h.update(
            _PACK_BLOB.pack(
                blob.serial,
                blob.source_owner,
                blob.mass,
                blob.x,
                blob.y,
                blob.vx,
                blob.vy,
            )
        )
    return int.from_bytes(h.digest(), "little")
