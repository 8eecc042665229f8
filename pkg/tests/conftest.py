"""Shared helpers for the test suite.

Most oracle tests want a *surgical* world: explicit start positions, no
random pellets or viruses, actuation noise off, decay off.  ``bare_config``
builds exactly that; tests then place entities by hand so every distance
and mass in an assertion is a number the test chose.
"""

from __future__ import annotations

from hypothesis import HealthCheck, settings

from petridish.dynamics import ControlInput, DiscreteAction, TickEvents, step_tick
from petridish.world import (
    Cell,
    EjectedBlob,
    PlayerSpec,
    Vec2,
    Virus,
    WorldConfig,
    WorldState,
    create_world,
)

# One profile for the whole suite: hypothesis deadlines are wall-clock and
# flaky under load, so shrink/verify on examples alone.
settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


def bare_config(**overrides) -> WorldConfig:
    """A small, empty, deterministic world config (one centered player)."""
    base = dict(
        arena_width=200.0,
        arena_height=200.0,
        max_pellets=0,
        pellet_regen_interval=600,
        min_viruses=0,
        initial_mass=25.0,
        noise_std=0.0,
        obs_resolution=64,
        seed=7,
        players=(PlayerSpec(),),
        start_positions=((100.0, 100.0),),
        mass_decay_enabled=False,
        virus_regen_enabled=False,
    )
    base.update(overrides)
    return WorldConfig(**base)


def bare_world(**overrides) -> WorldState:
    return create_world(bare_config(**overrides))


def hold_controls(world: WorldState) -> list[ControlInput]:
    """One stand-still control per player (cursor on its own centroid)."""
    return [
        ControlInput(p.index, p.centroid(), DiscreteAction.NONE)
        for p in world.players
    ]


def step_hold(world: WorldState, ticks: int = 1) -> TickEvents:
    """Advance with every player standing still; returns the last events."""
    events = TickEvents(tick=world.tick)
    for _ in range(ticks):
        events = step_tick(world, hold_controls(world))
    return events


def step_aim(
    world: WorldState,
    targets: dict[int, Vec2],
    discretes: dict[int, DiscreteAction] | None = None,
) -> TickEvents:
    """Advance one tick aiming selected players; the rest stand still."""
    discretes = discretes or {}
    controls = []
    for p in world.players:
        cursor = targets.get(p.index, p.centroid())
        controls.append(
            ControlInput(p.index, cursor, discretes.get(p.index, DiscreteAction.NONE))
        )
    return step_tick(world, controls)


def add_cell(world: WorldState, owner: int, mass: float, x: float, y: float, **kw) -> Cell:
    """Append a cell to a player (test surgery; serial stays canonical)."""
    cell = Cell(world.next_serial(), owner, mass, x, y, **kw)
    world.players[owner].cells.append(cell)
    return cell


def add_virus(world: WorldState, x: float, y: float) -> Virus:
    virus = Virus(world.next_serial(), x, y)
    world.viruses.append(virus)
    return virus


def add_blob(
    world: WorldState, x: float, y: float, vx: float = 0.0, vy: float = 0.0,
    mass: float = 14.0, owner: int = 0,
) -> EjectedBlob:
    blob = EjectedBlob(world.next_serial(), x, y, vx, vy, mass, owner)
    world.blobs.append(blob)
    return blob


def add_pellet(world: WorldState, x: float, y: float) -> int:
    serial = world.next_serial()
    world.pellets.add(serial, x, y)
    return serial
