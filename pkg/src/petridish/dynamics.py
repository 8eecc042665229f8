"""The per-tick update pipeline.

One call to :func:`step_tick` advances the world by exactly one tick,
executing nine stages in a pinned order:

  1. discrete actions (split / eject),
  2. movement: cursor seeking, impulse decay, wall clamping, and the
     pellet-crush pass for viruses that moved,
  3. blob-into-virus feeding (and virus splitting on the 7th feed),
  4. consumption resolution (pellets, blobs, enemy cells),
  5. virus absorption and fragmentation,
  6. same-owner merging / separation,
  7. mass decay (every ``decay_interval`` ticks),
  8. regeneration (pellets on the regen interval, viruses below the
     minimum),
  9. death/respawn (players eaten this tick reappear immediately).

The order is behaviorally significant (a golden-hash test pins it):
actions precede movement so split-then-flee is expressible within one
decision, and regeneration precedes respawn so the respawn point accounts
for freshly spawned hazards.

Determinism: the pipeline is a pure function of ``(world, controls)`` up
to the world's own RNG stream.  RNG draw sites per tick, in order:
regeneration (stage 8), then respawn (stage 9).  Actuation noise is drawn
from the same stream by the env layer before each decision block, ahead of
the block's ticks (see ``env``).

Velocity conventions: all speeds from :func:`petridish.world.speed_of` are
world-units/second and are divided by ``TICKS_PER_SECOND`` on use; all
velocity/impulse fields on entities are world-units/tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InputError, WorldConstructionError
from .pellets import PELLET_RADIUS
from .world import (
    Cell,
    EjectedBlob,
    EntityId,
    PLACEMENT_RETRIES,
    PlayerState,
    TICKS_PER_SECOND,
    Vec2,
    Virus,
    VIRUS_MASS,
    VIRUS_RADIUS,
    WorldState,
    _sample_pellet_point,
    _uniform_point,
    respawn_position,
    speed_of,
)

# Consumption geometry: eater must outweigh prey by this ratio, and the
# prey's center must lie inside the eater's circle.
EAT_RATIO = 1.25

# Split/impulse kinematics.  Impulses decay exponentially with a 0.25 s
# half-life and are zeroed once negligible.
SPLIT_BOOST_FACTOR = 2.5  # x speed_of(child mass), world-units/s
IMPULSE_HALF_LIFE_TICKS = 15
IMPULSE_FRICTION = 0.5 ** (1.0 / IMPULSE_HALF_LIFE_TICKS)
IMPULSE_REST_EPS = 1e-3  # world-units/tick

# Merging.
MERGE_COOLDOWN_BASE_TICKS = 1800  # 30 s
MERGE_COOLDOWN_MASS_FACTOR = 1.2  # extra ticks per unit of cell mass

# Ejection.
EJECT_COST = 18.0
EJECT_BLOB_MASS = 14.0
EJECT_BOOST = 3.0 * speed_of(25.0)  # world-units/s

# Viruses.
VIRUS_BOOST = 250.0  # world-units/s when propelled by the 7th feed
VIRUS_FRAGMENT_UNIT = 50.0  # K = max(2, floor(mass / 50)) fragments
VIRUS_STREAK_WINDOW_TICKS = 1800  # streak forgotten after 30 s without an eat
VIRUS_PENALTY_STEP = 0.5
VIRUS_PENALTY_FREE_EATS = 2


class DiscreteAction(IntEnum):
    NONE = 0
    SPLIT = 1
    EJECT = 2


class ControlInput(NamedTuple):
    """One player's control for one tick: a world-space cursor point plus
    an optional discrete action."""

    player: int
    cursor_world: Vec2
    discrete: DiscreteAction = DiscreteAction.NONE


@dataclass
class TickEvents:
    """Everything that happened during one tick, for reward attribution,
    bookkeeping audits, and logging.

    ``eats`` carries (eater id, eaten id, mass transferred); a virus
    absorption appears there with mass 100 in addition to its
    ``virus_pops`` entry.  Pellets crushed by moving viruses are counted
    separately because no cell gains their mass.
    """

    tick: int
    eats: list[tuple[EntityId, EntityId, float]] = field(default_factory=list)
    deaths: list[tuple[int, float]] = field(default_factory=list)
    respawns: list[tuple[int, int]] = field(default_factory=list)
    splits: list[tuple[int, int, int]] = field(default_factory=list)
    merges: list[tuple[int, int, int]] = field(default_factory=list)
    virus_pops: list[tuple[int, int, int]] = field(default_factory=list)
    virus_spawns: list[tuple[int, int]] = field(default_factory=list)
    ejects: list[tuple[int, int, int]] = field(default_factory=list)
    feeds: list[tuple[int, int]] = field(default_factory=list)
    decay_loss: float = 0.0
    pellets_spawned: int = 0
    pellets_crushed: int = 0
    virus_regens: list[int] = field(default_factory=list)


def merge_cooldown(mass: float) -> int:
    """Ticks a freshly split cell must wait before it may remerge."""
    return MERGE_COOLDOWN_BASE_TICKS + int(round(MERGE_COOLDOWN_MASS_FACTOR * mass))


def _direction_to(x: float, y: float, tx: float, ty: float) -> tuple[float, float]:
    """Unit vector from (x, y) toward (tx, ty); +x when degenerate."""
    dx = tx - x
    dy = ty - y
    d = math.hypot(dx, dy)
    if d < 1e-12:
        return 1.0, 0.0
    return dx / d, dy / d


def _clamp_axis(value: float, radius: float, limit: float) -> tuple[float, bool]:
    """Clamp a center coordinate so the circle stays inside [0, limit]."""
    lo = radius
    hi = limit - radius
    if lo > hi:  # circle wider than the arena: park at the midline
        return limit / 2.0, True
    if value < lo:
        return lo, True
    if value > hi:
        return hi, True
    return value, False


# -- stage 1: discrete actions -------------------------------------------------


def do_split(
    world: WorldState, player: PlayerState, cursor_world: Vec2, events: TickEvents
) -> None:
    """Split every eligible cell in two; silent no-op when ineligible.

    Cells are processed in descending-mass order (serial tiebreak) so the
    largest cells win the race to the cell cap.  The parent keeps its
    position, velocity, and merge timer; the child spawns coincident with
    an impulse toward the cursor and a fresh merge cooldown.
    """
    config = world.config
    min_split_mass = 2.0 * config.mass_floor
    snapshot = sorted(player.cells, key=lambda c: (-c.mass, c.serial))
    for cell in snapshot:
        if len(player.cells) >= config.cell_cap:
            break
        if cell.mass < min_split_mass:
            continue
        half = cell.mass / 2.0
        ux, uy = _direction_to(cell.x, cell.y, cursor_world.x, cursor_world.y)
        cell.mass = half
        boost = SPLIT_BOOST_FACTOR * speed_of(half) / TICKS_PER_SECOND
        child = Cell(
            world.next_serial(),
            player.index,
            half,
            cell.x,
            cell.y,
            ix=ux * boost,
            iy=uy * boost,
            merge_ready_tick=world.tick + merge_cooldown(half),
            created_tick=world.tick,
        )
        player.cells.append(child)
        events.splits.append((player.index, cell.serial, child.serial))


def do_eject(
    world: WorldState, player: PlayerState, cursor_world: Vec2, events: TickEvents
) -> None:
    """Expel a blob from every cell heavy enough to pay the cost.

    The blob appears just outside the (shrunken) cell rim toward the
    cursor — tangent, not embedded, so it is not instantly re-absorbed —
    and departs at ``EJECT_BOOST``.
    """
    config = world.config
    threshold = config.mass_floor + EJECT_COST
    blob_radius = math.sqrt(EJECT_BLOB_MASS)
    for cell in list(player.cells):
        if cell.mass < threshold:
            continue
        ux, uy = _direction_to(cell.x, cell.y, cursor_world.x, cursor_world.y)
        cell.mass -= EJECT_COST
        offset = math.sqrt(cell.mass) + blob_radius
        bx, clamped_x = _clamp_axis(cell.x + ux * offset, blob_radius, config.arena_width)
        by, clamped_y = _clamp_axis(cell.y + uy * offset, blob_radius, config.arena_height)
        speed = EJECT_BOOST / TICKS_PER_SECOND
        blob = EjectedBlob(
            world.next_serial(),
            bx,
            by,
            0.0 if clamped_x else ux * speed,
            0.0 if clamped_y else uy * speed,
            EJECT_BLOB_MASS,
            player.index,
        )
        world.blobs.append(blob)
        events.ejects.append((player.index, cell.serial, blob.serial))


# -- stage 2: movement ---------------------------------------------------------


def apply_movement(
    world: WorldState, controls_by_player: Sequence[Optional[ControlInput]]
) -> int:
    """Advance every mobile entity by one tick; returns pellets crushed.

    Cells step toward their cursor at ``speed_of(mass)/60`` (never
    overshooting it) plus their residual impulse; blobs and viruses coast
    on their velocity.  Impulses and velocities decay by the shared
    friction factor and are zeroed at walls on the clamped axis.  Moving
    viruses crush pellets they touch so pellet and virus circles never
    overlap (the observation channels rely on this).
    """
    config = world.config
    width = config.arena_width
    height = config.arena_height

    for player in world.players:
        control = controls_by_player[player.index] if player.index < len(
            controls_by_player
        ) else None
        for cell in player.cells:
            mx = my = 0.0
            if control is not None:
                tx, ty = control.cursor_world
                dx = tx - cell.x
                dy = ty - cell.y
                dist = math.hypot(dx, dy)
                if dist > 1e-12:
                    step = speed_of(cell.mass) / TICKS_PER_SECOND
                    if step > dist:
                        step = dist
                    mx = dx / dist * step
                    my = dy / dist * step
            mx += cell.ix
            my += cell.iy
            cell.ix *= IMPULSE_FRICTION
            cell.iy *= IMPULSE_FRICTION
            if cell.ix * cell.ix + cell.iy * cell.iy < IMPULSE_REST_EPS**2:
                cell.ix = 0.0
                cell.iy = 0.0
            radius = math.sqrt(cell.mass)
            old_x = cell.x
            old_y = cell.y
            nx, hit_x = _clamp_axis(cell.x + mx, radius, width)
            ny, hit_y = _clamp_axis(cell.y + my, radius, height)
            if hit_x:
                cell.ix = 0.0
            if hit_y:
                cell.iy = 0.0
            cell.x = nx
            cell.y = ny
            cell.vx = nx - old_x
            cell.vy = ny - old_y

    for blob in world.blobs:
        if blob.vx == 0.0 and blob.vy == 0.0:
            continue
        radius = blob.radius
        nx, hit_x = _clamp_axis(blob.x + blob.vx, radius, width)
        ny, hit_y = _clamp_axis(blob.y + blob.vy, radius, height)
        blob.x = nx
        blob.y = ny
        blob.vx = 0.0 if hit_x else blob.vx * IMPULSE_FRICTION
        blob.vy = 0.0 if hit_y else blob.vy * IMPULSE_FRICTION
        if blob.vx * blob.vx + blob.vy * blob.vy < IMPULSE_REST_EPS**2:
            blob.vx = 0.0
            blob.vy = 0.0

    crushed = 0
    moved_viruses = []
    for virus in world.viruses:
        if virus.vx == 0.0 and virus.vy == 0.0:
            continue
        nx, hit_x = _clamp_axis(virus.x + virus.vx, VIRUS_RADIUS, width)
        ny, hit_y = _clamp_axis(virus.y + virus.vy, VIRUS_RADIUS, height)
        virus.x = nx
        virus.y = ny
        virus.vx = 0.0 if hit_x else virus.vx * IMPULSE_FRICTION
        virus.vy = 0.0 if hit_y else virus.vy * IMPULSE_FRICTION
        if virus.vx * virus.vx + virus.vy * virus.vy < IMPULSE_REST_EPS**2:
            virus.vx = 0.0
            virus.vy = 0.0
        moved_viruses.append(virus)

    if moved_viruses and world.pellets.count:
        store = world.pellets
        doomed = np.zeros(store.count, dtype=bool)
        for virus in moved_viruses:
            doomed |= store.inside_circle(
                virus.x, virus.y, VIRUS_RADIUS + PELLET_RADIUS
            )
        crushed = int(doomed.sum())
        if crushed:
            store.remove_by_mask(doomed)
    return crushed


# -- stage 3: feeding ----------------------------------------------------------


def feed_virus(world: WorldState, events: TickEvents) -> None:
    """Feed blobs whose centers entered a virus circle; split on the 7th.

    Blobs are offered in serial order to viruses in serial order; the
    first containing virus wins.  On the splitting feed, a fresh virus
    spawns at the original's position and the original launches along the
    last feed direction with ``VIRUS_BOOST``; both reset to zero feeds.
    """
    if not world.blobs or not world.viruses:
        return
    surviving: list[EjectedBlob] = []
    for blob in world.blobs:
        consumed = False
        for virus in world.viruses:
            dx = blob.x - virus.x
            dy = blob.y - virus.y
            if dx * dx + dy * dy <= VIRUS_RADIUS * VIRUS_RADIUS:
                consumed = True
                events.feeds.append((virus.serial, blob.serial))
                speed = math.hypot(blob.vx, blob.vy)
                if speed > 1e-12:
                    virus.fdx = blob.vx / speed
                    virus.fdy = blob.vy / speed
                elif virus.fdx == 0.0 and virus.fdy == 0.0:
                    virus.fdx, virus.fdy = 1.0, 0.0
                virus.feed_count += 1
                if virus.feed_count >= world.config.virus_split_feeds:
                    child = Virus(world.next_serial(), virus.x, virus.y)
                    world.viruses.append(child)
                    launch = VIRUS_BOOST / TICKS_PER_SECOND
                    virus.vx = virus.fdx * launch
                    virus.vy = virus.fdy * launch
                    virus.feed_count = 0
                    events.virus_spawns.append((virus.serial, child.serial))
                break
        if not consumed:
            surviving.append(blob)
    world.blobs = surviving


# -- stage 4: consumption ------------------------------------------------------


def resolve_consumption(world: WorldState, events: TickEvents) -> None:
    """Resolve all eating for the tick.

    Eaters act in descending entry-mass order (serial tiebreak); each prey
    is eaten at most once.  Pellet claims use each eater's stage-entry
    radius (precomputed as one vectorized containment matrix); blob and
    enemy-cell checks use live masses so gains within the tick compound.
    A player whose last cell is eaten is recorded as a death and respawns
    in stage 9.
    """
    eaters = sorted(world.all_cells(), key=lambda c: (-c.mass, c.serial))
    if not eaters:
        return
    store = world.pellets
    n_pellets = store.count
    pellet_winner = None
    if n_pellets:
        # First containing eater in priority order claims each pellet.
        # Containment compares squared distance against mass directly
        # (radius^2 == mass, exactly), using stage-entry positions/masses.
        pellet_winner = np.full(n_pellets, -1, dtype=np.int32)
        xs = store.x_view()
        ys = store.y_view()
        for position, eater in enumerate(eaters):
            dx = xs - eater.x
            dy = ys - eater.y
            mask = (dx * dx + dy * dy <= eater.mass) & (pellet_winner < 0)
            if mask.any():
                pellet_winner[mask] = position

    multiple_players = len(world.players) > 1
    eaten_serials: set[int] = set()
    eaten_pellet_mask = np.zeros(n_pellets, dtype=bool) if n_pellets else None
    live_counts = {p.index: len(p.cells) for p in world.players}
    blobs_eaten: set[int] = set()

    for position, eater in enumerate(eaters):
        if eater.serial in eaten_serials:
            continue

        if n_pellets:
            mine = pellet_winner == position
            count = int(mine.sum())
            if count:
                ids = store.id_view()[mine]
                eater_id = eater.id
                for pid in ids:
                    events.eats.append(
                        (eater_id, EntityId("pellet", int(pid)), 1.0)
                    )
                eater.mass += float(count)
                eaten_pellet_mask |= mine

        if world.blobs:
            r2 = eater.mass
            for blob in world.blobs:
                if blob.serial in blobs_eaten:
                    continue
                dx_b = blob.x - eater.x
                dy_b = blob.y - eater.y
                if dx_b * dx_b + dy_b * dy_b <= r2:
                    blobs_eaten.add(blob.serial)
                    eater.mass += blob.mass
                    r2 = eater.mass
                    events.eats.append((eater.id, blob.id, blob.mass))

        if multiple_players:
            r2 = eater.mass
            for prey in eaters:
                if (
                    prey.owner == eater.owner
                    or prey.serial in eaten_serials
                    or eater.mass < EAT_RATIO * prey.mass
                ):
                    continue
                dx_c = prey.x - eater.x
                dy_c = prey.y - eater.y
                if dx_c * dx_c + dy_c * dy_c <= r2:
                    eaten_serials.add(prey.serial)
                    eater.mass += prey.mass
                    r2 = eater.mass
                    events.eats.append((eater.id, prey.id, prey.mass))
                    live_counts[prey.owner] -= 1
                    if live_counts[prey.owner] == 0:
                        events.deaths.append((prey.owner, prey.mass))

    if n_pellets and eaten_pellet_mask is not None and eaten_pellet_mask.any():
        store.remove_by_mask(eaten_pellet_mask)
    if blobs_eaten:
        world.blobs = [b for b in world.blobs if b.serial not in blobs_eaten]
    if eaten_serials:
        for player in world.players:
            player.cells = [c for c in player.cells if c.serial not in eaten_serials]


# -- stage 5: virus interactions -----------------------------------------------


def virus_interaction(world: WorldState, events: TickEvents) -> None:
    """Absorb viruses into big-enough cells, then fragment the absorber.

    A cell of mass >= EAT_RATIO x 100 whose circle contains a virus center
    absorbs it (mass +100), advances the owner's virus-eat streak and decay
    penalty, and bursts into K equal pieces (remainder folded into the
    retained cell so total mass is conserved bit-exactly), flung radially.
    Cells below the threshold simply shelter behind viruses.  Streaks are
    forgotten — and the penalty cleared — after 30 s without a virus eat.
    """
    for player in world.players:
        if (
            player.virus_eat_streak
            and world.tick - player.last_virus_eat_tick > VIRUS_STREAK_WINDOW_TICKS
        ):
            player.virus_eat_streak = 0
            player.decay_multiplier = 1.0

    if not world.viruses:
        return
    threshold = EAT_RATIO * VIRUS_MASS
    snapshot = sorted(
        (c for c in world.all_cells() if c.mass >= threshold),
        key=lambda c: (-c.mass, c.serial),
    )
    if not snapshot:
        return
    eaten_viruses: set[int] = set()
    for cell in snapshot:
        player = world.players[cell.owner]
        for virus in world.viruses:
            if cell.mass < threshold:
                break
            if virus.serial in eaten_viruses:
                continue
            dx = virus.x - cell.x
            dy = virus.y - cell.y
            if dx * dx + dy * dy > cell.mass:
                continue
            eaten_viruses.add(virus.serial)
            cell.mass += VIRUS_MASS
            events.eats.append((cell.id, virus.id, VIRUS_MASS))

            if world.tick - player.last_virus_eat_tick > VIRUS_STREAK_WINDOW_TICKS:
                player.virus_eat_streak = 0
            player.virus_eat_streak += 1
            player.last_virus_eat_tick = world.tick
            player.decay_multiplier = 1.0 + VIRUS_PENALTY_STEP * max(
                0, player.virus_eat_streak - VIRUS_PENALTY_FREE_EATS
            )

            k = min(
                world.config.cell_cap - (len(player.cells) - 1),
                max(2, int(cell.mass // VIRUS_FRAGMENT_UNIT)),
            )
            events.virus_pops.append((cell.owner, cell.serial, max(k, 1)))
            if k >= 2:
                piece = cell.mass / k
                retained = cell.mass - (k - 1) * piece
                cell.mass = retained
                boost_r = SPLIT_BOOST_FACTOR * speed_of(retained) / TICKS_PER_SECOND
                cell.ix += boost_r  # retained piece flung along angle 0
                cell.merge_ready_tick = world.tick + merge_cooldown(retained)
                boost_p = SPLIT_BOOST_FACTOR * speed_of(piece) / TICKS_PER_SECOND
                for j in range(1, k):
                    angle = 2.0 * math.pi * j / k
                    fragment = Cell(
                        world.next_serial(),
                        cell.owner,
                        piece,
                        cell.x,
                        cell.y,
                        ix=math.cos(angle) * boost_p,
                        iy=math.sin(angle) * boost_p,
                        merge_ready_tick=world.tick + merge_cooldown(piece),
                        created_tick=world.tick,
                    )
                    player.cells.append(fragment)
    if eaten_viruses:
        world.viruses = [v for v in world.viruses if v.serial not in eaten_viruses]


# -- stage 6: merging ----------------------------------------------------------


def merge_pass(world: WorldState, events: TickEvents) -> None:
    """Merge ready same-owner cell pairs; push apart the rest.

    Merging: both cells past their merge tick and centers closer than the
    larger radius — iterated to a fixpoint, heavier serial-ordered pair
    first, merged cell at the mass-weighted centroid.  Overlapping pairs
    that are not both ready get separated mass-proportionally to exact
    tangency (the lighter cell moves farther).
    """
    tick = world.tick
    config = world.config
    for player in world.players:
        cells = player.cells
        if len(cells) < 2:
            continue

        changed = True
        while changed:
            changed = False
            cells.sort(key=lambda c: c.serial)
            n = len(cells)
            for i in range(n):
                a = cells[i]
                if tick < a.merge_ready_tick:
                    continue
                for j in range(i + 1, n):
                    b = cells[j]
                    if tick < b.merge_ready_tick:
                        continue
                    dx = b.x - a.x
                    dy = b.y - a.y
                    ra = math.sqrt(a.mass)
                    rb = math.sqrt(b.mass)
                    rmax = ra if ra > rb else rb
                    if dx * dx + dy * dy >= rmax * rmax:
                        continue
                    keep, gone = (a, b) if (a.mass, -a.serial) >= (b.mass, -b.serial) else (b, a)
                    total = a.mass + b.mass
                    keep.x = (a.mass * a.x + b.mass * b.x) / total
                    keep.y = (a.mass * a.y + b.mass * b.y) / total
                    keep.vx = (a.mass * a.vx + b.mass * b.vx) / total
                    keep.vy = (a.mass * a.vy + b.mass * b.vy) / total
                    keep.ix = (a.mass * a.ix + b.mass * b.ix) / total
                    keep.iy = (a.mass * a.iy + b.mass * b.iy) / total
                    keep.merge_ready_tick = max(a.merge_ready_tick, b.merge_ready_tick)
                    keep.created_tick = min(a.created_tick, b.created_tick)
                    keep.mass = total
                    cells.remove(gone)
                    events.merges.append((player.index, keep.serial, gone.serial))
                    changed = True
                    break
                if changed:
                    break

        # Separation push for overlapping pairs not eligible to merge.
        cells.sort(key=lambda c: c.serial)
        n = len(cells)
        for i in range(n):
            a = cells[i]
            for j in range(i + 1, n):
                b = cells[j]
                if tick >= a.merge_ready_tick and tick >= b.merge_ready_tick:
                    continue  # let them glide together and merge later
                dx = b.x - a.x
                dy = b.y - a.y
                dist = math.hypot(dx, dy)
                ra = math.sqrt(a.mass)
                rb = math.sqrt(b.mass)
                overlap = ra + rb - dist
                if overlap <= 0.0:
                    continue
                if dist < 1e-9:
                    ux, uy = 1.0, 0.0
                else:
                    ux, uy = dx / dist, dy / dist
                total = a.mass + b.mass
                push_a = overlap * (b.mass / total)
                push_b = overlap * (a.mass / total)
                a.x, _ = _clamp_axis(a.x - ux * push_a, ra, config.arena_width)
                a.y, _ = _clamp_axis(a.y - uy * push_a, ra, config.arena_height)
                b.x, _ = _clamp_axis(b.x + ux * push_b, rb, config.arena_width)
                b.y, _ = _clamp_axis(b.y + uy * push_b, rb, config.arena_height)


# -- stage 7: decay ------------------------------------------------------------


def apply_decay(world: WorldState, events: TickEvents) -> None:
    """Shrink every cell by the decay rate (times any virus penalty),
    never below the mass floor."""
    floor = world.config.mass_floor
    rate = world.config.decay_rate
    for player in world.players:
        factor = 1.0 - rate * player.decay_multiplier
        for cell in player.cells:
            new_mass = cell.mass * factor
            if new_mass < floor:
                new_mass = floor
            if new_mass < cell.mass:
                events.decay_loss += cell.mass - new_mass
                cell.mass = new_mass


# -- stage 8: regeneration -----------------------------------------------------


def regeneration_pass(world: WorldState, events: TickEvents) -> None:
    """Top pellets up to the maximum on the regen interval; keep the virus
    population at the minimum (every ``virus_regen_interval`` ticks).

    Virus spawn points avoid cells, pellets, and other viruses; if no
    clear point is found within the retry budget, the best candidate is
    used and any pellets beneath it are crushed (the pellet/virus
    disjointness invariant outranks pellet conservation).
    """
    config = world.config
    if (
        config.max_pellets > 0
        and config.pellet_regen_interval > 0
        and world.tick % config.pellet_regen_interval == 0
        and world.pellets.count < config.max_pellets
    ):
        need = config.max_pellets - world.pellets.count
        for _ in range(need):
            try:
                x, y = _sample_pellet_point(world.rng, config, world.viruses)
            except WorldConstructionError:
                break  # saturated arena: try again next interval
            world.pellets.add(world.next_serial(), x, y)
            events.pellets_spawned += 1

    if (
        config.virus_regen_enabled
        and config.virus_regen_interval > 0
        and world.tick % config.virus_regen_interval == 0
    ):
        while len(world.viruses) < config.min_viruses:
            x, y = _spawn_virus_position(world)
            virus = Virus(world.next_serial(), x, y)
            world.viruses.append(virus)
            events.virus_regens.append(virus.serial)
            store = world.pellets
            if store.count:
                doomed = store.inside_circle(x, y, VIRUS_RADIUS + PELLET_RADIUS)
                hit = int(doomed.sum())
                if hit:
                    store.remove_by_mask(doomed)
                    events.pellets_crushed += hit


def _spawn_virus_position(world: WorldState) -> tuple[float, float]:
    """Sample a regen-virus position clear of cells, pellets, viruses."""
    config = world.config
    store = world.pellets
    best: tuple[float, float] | None = None
    best_clearance = -math.inf
    cells = list(world.all_cells())
    for _ in range(PLACEMENT_RETRIES):
        x, y = _uniform_point(world.rng, VIRUS_RADIUS, config.arena_width, config.arena_height)
        clearance = math.inf
        for c in cells:
            d = math.hypot(c.x - x, c.y - y) - c.radius - VIRUS_RADIUS
            if d < clearance:
                clearance = d
        for v in world.viruses:
            d = math.hypot(v.x - x, v.y - y) - 2 * VIRUS_RADIUS
            if d < clearance:
                clearance = d
        pellet_clear = True
        if store.count:
            if store.inside_circle(x, y, VIRUS_RADIUS + PELLET_RADIUS).any():
                pellet_clear = False
        if clearance >= 0.0 and pellet_clear:
            return x, y
        if clearance > best_clearance:
            best_clearance = clearance
            best = (x, y)
    assert best is not None
    return best


# -- stage 9: death and respawn ------------------------------------------------


def death_respawn_pass(world: WorldState, events: TickEvents) -> None:
    """Respawn every player recorded dead this tick as a fresh cell of its
    initial mass; nothing else in the world is touched."""
    for owner, _death_mass in events.deaths:
        player = world.players[owner]
        player.lifetime_deaths += 1
        pos = respawn_position(world, player.initial_mass)
        cell = Cell(
            world.next_serial(),
            owner,
            player.initial_mass,
            pos.x,
            pos.y,
            created_tick=world.tick,
        )
        player.cells.append(cell)
        events.respawns.append((owner, cell.serial))


# -- the pipeline --------------------------------------------------------------


def step_tick(
    world: WorldState, controls: Sequence[ControlInput]
) -> TickEvents:
    """Advance the world one tick.  See the module docstring for stages.

    Requires exactly one control per player (any order); raises
    :class:`InputError` before any mutation otherwise.
    """
    n = len(world.players)
    by_player: list[Optional[ControlInput]] = [None] * n
    for control in controls:
        idx = control.player
        if not 0 <= idx < n:
            raise InputError(f"control references unknown player {idx}")
        if by_player[idx] is not None:
            raise InputError(f"duplicate control for player {idx}")
        by_player[idx] = control
    if any(c is None for c in by_player):
        missing = [i for i, c in enumerate(by_player) if c is None]
        raise InputError(f"missing controls for players {missing}")

    world.tick += 1
    events = TickEvents(tick=world.tick)

    # 1. discrete actions
    for control in by_player:
        assert control is not None
        if control.discrete == DiscreteAction.SPLIT:
            do_split(world, world.players[control.player], control.cursor_world, events)
        elif control.discrete == DiscreteAction.EJECT:
            do_eject(world, world.players[control.player], control.cursor_world, events)

    # 2. movement (incl. virus pellet-crush)
    events.pellets_crushed += apply_movement(world, by_player)

    # 3. blob -> virus feeding
    feed_virus(world, events)

    # 4. consumption
    resolve_consumption(world, events)

    # 5. virus absorption / fragmentation
    virus_interaction(world, events)

    # 6. merging / separation
    merge_pass(world, events)

    # 7. decay
    if world.config.mass_decay_enabled and world.config.decay_interval > 0:
        if world.tick % world.config.decay_interval == 0:
            apply_decay(world, events)

    # 8. regeneration
    regeneration_pass(world, events)

    # 9. death / respawn
    death_respawn_pass(world, events)

    return events
