"""Fixed-policy opponents.

Four heuristic kinds plus a null policy:

  - ``hungry``          — chases the nearest pellet, nothing else.
  - ``hungry_shy``      — flees nearby larger opponents, else chases pellets.
  - ``aggressive``      — hunts nearby eatable opponents, else chases pellets.
  - ``aggressive_shy``  — flees first, hunts second, pellets third.
  - ``stationary``      — aims at its own centroid (stands still).

Decision priority (top wins):

  1. *Shy* variants: if any opposing cell of mass ≥ EAT_RATIO x this bot's
     largest cell lies within ``shy_radius`` of the bot's centroid, flee —
     the cursor is placed ``shy_radius`` away from the centroid, exactly
     antipodal to the nearest such threat.
  2. *Aggressive* variants: if any opposing cell the bot's largest cell
     could eat (own largest ≥ EAT_RATIO x its mass) lies within
     ``hunt_radius``, aim the cursor at the nearest such prey.
  3. Aim at the nearest pellet (ties broken by lowest pellet id).
  4. No pellets: aim at the bot's own centroid (stand still).

Bots never split or eject; the discrete action is always NONE.  Decisions
are pure functions of the world snapshot, so identical inputs always yield
identical controls and all bots may be decided in parallel between ticks.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .dynamics import EAT_RATIO, ControlInput, DiscreteAction
from .errors import ConfigError
from .world import PlayerState, Vec2, WorldState

HUNT_RADIUS = 100.0
SHY_RADIUS = 80.0


class BotKind(NamedTuple):
    """A heuristic policy: its name and the radii it reacts within
    (``hungry`` ignores both radii; ``stationary`` ignores everything)."""

    name: str
    hunt_radius: float = HUNT_RADIUS
    shy_radius: float = SHY_RADIUS


BOT_KINDS = ("hungry", "hungry_shy", "aggressive", "aggressive_shy", "stationary")


def bot_kind(name: str) -> BotKind:
    """Look up a bot policy by name."""
    if name not in BOT_KINDS:
        raise ConfigError(f"unknown bot kind {name!r} (choose from {BOT_KINDS})")
    return BotKind(name)


def _nearest_opposing_cell(
    world: WorldState,
    me: PlayerState,
    origin: Vec2,
    radius: float,
    qualifies,
) -> tuple[float, float] | None:
    """Center of the nearest opposing cell within `radius` of `origin` that
    passes `qualifies(cell)`; ties broken by lowest serial (scan order)."""
    best: tuple[float, float] | None = None
    best_key: tuple[float, int] | None = None
    r2 = radius * radius
    for other in world.players:
        if other.index == me.index:
            continue
        for cell in other.cells:
            if not qualifies(cell):
                continue
            dx = cell.x - origin.x
            dy = cell.y - origin.y
            d2 = dx * dx + dy * dy
            if d2 > r2:
                continue
            key = (d2, cell.serial)
            if best_key is None or key < best_key:
                best_key = key
                best = (cell.x, cell.y)
    return best


def bot_decide(kind: BotKind, world: WorldState, me: PlayerState) -> ControlInput:
    """Decide this tick's control for one bot (pure; never splits/ejects)."""
    centroid = me.centroid()
    if kind.name == "stationary":
        return ControlInput(me.index, centroid, DiscreteAction.NONE)

    own_largest = max(c.mass for c in me.cells)

    if kind.name in ("hungry_shy", "aggressive_shy"):
        threat = _nearest_opposing_cell(
            world,
            me,
            centroid,
            kind.shy_radius,
            lambda c: c.mass >= EAT_RATIO * own_largest,
        )
        if threat is not None:
            dx = centroid.x - threat[0]
            dy = centroid.y - threat[1]
            norm = math.hypot(dx, dy)
            if norm < 1e-12:
                dx, dy, norm = 1.0, 0.0, 1.0
            return ControlInput(
                me.index,
                Vec2(
                    centroid.x + dx / norm * kind.shy_radius,
                    centroid.y + dy / norm * kind.shy_radius,
                ),
                DiscreteAction.NONE,
            )

    if kind.name in ("aggressive", "aggressive_shy"):
        prey = _nearest_opposing_cell(
            world,
            me,
            centroid,
            kind.hunt_radius,
            lambda c: own_largest >= EAT_RATIO * c.mass,
        )
        if prey is not None:
            return ControlInput(me.index, Vec2(prey[0], prey[1]), DiscreteAction.NONE)

    idx = world.pellets.nearest_index(centroid.x, centroid.y)
    if idx >= 0:
        target = Vec2(float(world.pellets.xs[idx]), float(world.pellets.ys[idx]))
        return ControlInput(me.index, target, DiscreteAction.NONE)

    return ControlInput(me.index, centroid, DiscreteAction.NONE)


def decide_all_bots(world: WorldState) -> list[ControlInput]:
    """Controls for every bot-driven player this tick (skips learning
    agents and players with no bot_kind)."""
    controls: list[ControlInput] = []
    for player in world.players:
        if player.bot_kind is None:
            continue
        controls.append(bot_decide(bot_kind(player.bot_kind), world, player))
    return controls
