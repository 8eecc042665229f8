"""The scenario catalog: named presets plus a versioned config-file format.

A :class:`ScenarioSpec` bundles a :class:`~petridish.world.WorldConfig` with
run-mode metadata: episodic (fixed-length episodes, optional early
termination when a player is eaten) or continual (one unbounded run, no
resets ever).  The library ships ready-made presets:

  ============================  ========================================================
  name                          setting
  ============================  ========================================================
  mini-1 .. mini-3              episodic square-path pellet runs, 500 steps
                                (plain / mass decay / decay + start mass 1000)
  mini-4 .. mini-6              the same ladder with uniformly scattered pellets,
                                3000 steps
  mini-1c .. mini-6c            continual versions of the six above (pellets top up
                                every 600 ticks, max 500)
  mini-4c/5c/6c-sparse          the continual uniform ladder at half pellet density
  mini-7-*                      duel vs. a hungry bot (episodic, 10000 steps, ends
                                early if the agent is eaten)
  mini-8-*                      duel vs. an aggressive bot (same shape)
  mini-9                        virus wall: mass-3000 agent vs. stationary mass-5000
                                bot behind a line of viruses; fully observable;
                                ends when either player is eaten or at 1000 steps
  full                          the standard continual game: 350x350, 500 pellets,
                                10 viruses, 8 heuristic bots
  full-easy                     faster regeneration (120 ticks) and 1024 pellets
  full-compact                  the standard game in a 128x128 arena
  ============================  ========================================================

Duel presets come in a large-dense arena (350x350, 500 pellets) and a
small-sparse one (200x200, 250 pellets); ``-alt`` small-sparse variants with
200 pellets are included because both densities are in circulation.

``validate_catalog()`` cross-checks every preset against the reference
parameter table frozen in this module and returns a list of mismatch
descriptions (empty when the catalog is intact).

Config files use INI syntax (sections ``[scenario]``, ``[world]``,
``[players]``, ``[start]``) with an explicit ``schema_version``;
``scenario_to_ini`` / ``scenario_from_ini`` round-trip a spec exactly.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, replace

from .bots import BOT_KINDS
from .errors import ConfigError
from .world import PlayerSpec, WorldConfig

SCHEMA_VERSION = 1

#: Truncation threshold for no-decay continual pellet runs, where mass would
#: otherwise grow without bound: starting mass 25 plus 23,000 collected.
GROWTH_CAP_MASS = 23025.0


@dataclass(frozen=True)
class ScenarioSpec:
    """A named, fully-specified way to run the game."""

    name: str
    world: WorldConfig
    mode: str  # "episodic" | "continual"
    description: str = ""
    max_steps: int | None = None
    terminate_on_agent_eaten: bool = False
    terminate_on_any_eaten: bool = False
    truncate_at_mass: float | None = None

    def validate(self) -> None:
        if self.mode not in ("episodic", "continual"):
            raise ConfigError(f"unknown scenario mode {self.mode!r}")
        if self.mode == "episodic":
            if self.max_steps is None or self.max_steps <= 0:
                raise ConfigError("episodic scenarios need max_steps > 0")
        else:
            if self.max_steps is not None:
                raise ConfigError("continual scenarios must not set max_steps")
            if self.terminate_on_agent_eaten or self.terminate_on_any_eaten:
                raise ConfigError("continual scenarios never terminate")
        if self.truncate_at_mass is not None and self.truncate_at_mass <= 0:
            raise ConfigError("truncate_at_mass must be positive")
        learners = sum(1 for p in self.world.players if p.bot_kind is None)
        if learners != 1:
            raise ConfigError(
                f"scenario {self.name!r} needs exactly one learning player "
                f"(got {learners})"
            )
        self.world.validate()


# -- preset construction ---------------------------------------------------


def _pellet_world(placement: str, mass: float, decay: bool, pellets: int = 500) -> WorldConfig:
    """A solo pellet-collection world: no viruses, fixed center start."""
    return WorldConfig(
        max_pellets=pellets,
        min_viruses=0,
        virus_regen_enabled=False,
        mass_decay_enabled=decay,
        initial_mass=mass,
        pellet_placement=placement,
        players=(PlayerSpec(),),
        start_positions=((175.0, 175.0),),
    )


def _duel_world(arena: float, pellets: int, bot: str) -> WorldConfig:
    """Agent vs. one bot, no viruses, uniform pellets, random spawns."""
    return WorldConfig(
        arena_width=arena,
        arena_height=arena,
        max_pellets=pellets,
        min_viruses=0,
        virus_regen_enabled=False,
        players=(PlayerSpec(), PlayerSpec(bot_kind=bot)),
    )


_FULL_BOTS = (
    PlayerSpec(bot_kind="hungry"),
    PlayerSpec(bot_kind="hungry"),
    PlayerSpec(bot_kind="hungry_shy"),
    PlayerSpec(bot_kind="hungry_shy"),
    PlayerSpec(bot_kind="aggressive"),
    PlayerSpec(bot_kind="aggressive"),
    PlayerSpec(bot_kind="aggressive_shy"),
    PlayerSpec(bot_kind="aggressive_shy"),
)

_FULL_WORLD = WorldConfig(players=(PlayerSpec(),) + _FULL_BOTS)

_VIRUS_WALL_WORLD = WorldConfig(
    max_pellets=0,
    min_viruses=10,
    virus_layout="line",
    virus_regen_enabled=False,
    mass_decay_enabled=False,
    fully_observable=True,
    players=(
        PlayerSpec(initial_mass=3000.0),
        PlayerSpec(bot_kind="stationary", initial_mass=5000.0),
    ),
    start_positions=((87.5, 175.0), (262.5, 175.0)),
)

_PELLET_LADDER = (
    # (index, placement, start mass, decay, episode length)
    (1, "square_path", 25.0, False, 500),
    (2, "square_path", 25.0, True, 500),
    (3, "square_path", 1000.0, True, 500),
    (4, "uniform", 25.0, False, 3000),
    (5, "uniform", 25.0, True, 3000),
    (6, "uniform", 1000.0, True, 3000),
)


def _build_library() -> dict[str, ScenarioSpec]:
    lib: dict[str, ScenarioSpec] = {}

    def add(spec: ScenarioSpec) -> None:
        spec.validate()
        lib[spec.name] = spec

    for idx, placement, mass, decay, steps in _PELLET_LADDER:
        shape = "square-path" if placement == "square_path" else "scattered-pellet"
        traits = f"start mass {mass:g}, decay {'on' if decay else 'off'}"
        add(
            ScenarioSpec(
                name=f"mini-{idx}",
                world=_pellet_world(placement, mass, decay),
                mode="episodic",
                max_steps=steps,
                description=f"Episodic {shape} run ({traits}, {steps} steps).",
            )
        )
        add(
            ScenarioSpec(
                name=f"mini-{idx}c",
                world=_pellet_world(placement, mass, decay),
                mode="continual",
                truncate_at_mass=GROWTH_CAP_MASS if not decay else None,
                description=f"Continual {shape} run ({traits}).",
            )
        )

    for idx, placement, mass, decay, _ in _PELLET_LADDER[3:]:
        add(
            ScenarioSpec(
                name=f"mini-{idx}c-sparse",
                world=_pellet_world(placement, mass, decay, pellets=250),
                mode="continual",
                truncate_at_mass=GROWTH_CAP_MASS if not decay else None,
                description=(
                    f"Continual scattered-pellet run at half density "
                    f"(250 pellets; start mass {mass:g}, "
                    f"decay {'on' if decay else 'off'})."
                ),
            )
        )

    for idx, bot in ((7, "hungry"), (8, "aggressive")):
        for tag, arena, pellets in (
            ("large-dense", 350.0, 500),
            ("small-sparse", 200.0, 250),
            ("small-sparse-alt", 200.0, 200),
        ):
            add(
                ScenarioSpec(
                    name=f"mini-{idx}-{tag}",
                    world=_duel_world(arena, pellets, bot),
                    mode="episodic",
                    max_steps=10000,
                    terminate_on_agent_eaten=True,
                    description=(
                        f"Duel vs. {'an' if bot[0] in 'aeiou' else 'a'} {bot} bot "
                        f"in a {arena:g}x{arena:g} arena with {pellets} pellets; "
                        "ends if the agent is eaten."
                    ),
                )
            )

    add(
        ScenarioSpec(
            name="mini-9",
            world=_VIRUS_WALL_WORLD,
            mode="episodic",
            max_steps=1000,
            terminate_on_any_eaten=True,
            description=(
                "Virus wall: mass-3000 agent and stationary mass-5000 bot on "
                "opposite sides of a line of viruses; fully observable, no "
                "pellets, no decay; ends when either player is eaten."
            ),
        )
    )

    add(
        ScenarioSpec(
            name="full",
            world=_FULL_WORLD,
            mode="continual",
            description=(
                "The standard continual game: 350x350 arena, 500 pellets, "
                "10 viruses, 8 heuristic bots."
            ),
        )
    )
    add(
        ScenarioSpec(
            name="full-easy",
            world=replace(
                _FULL_WORLD,
                max_pellets=1024,
                pellet_regen_interval=120,
                virus_regen_interval=120,
            ),
            mode="continual",
            description=(
                "The standard game with faster regeneration (every 120 ticks) "
                "and 1024 pellets."
            ),
        )
    )
    add(
        ScenarioSpec(
            name="full-compact",
            world=replace(_FULL_WORLD, arena_width=128.0, arena_height=128.0),
            mode="continual",
            description="The standard game squeezed into a 128x128 arena.",
        )
    )

    return lib


_LIBRARY: dict[str, ScenarioSpec] | None = None


def scenario_library() -> dict[str, ScenarioSpec]:
    """All built-in presets, keyed by name (insertion-ordered)."""
    global _LIBRARY
    if _LIBRARY is None:
        _LIBRARY = _build_library()
    return dict(_LIBRARY)


def get_scenario(name: str) -> ScenarioSpec:
    """Look up a preset by name, or load a scenario INI file by path."""
    lib = scenario_library()
    if name in lib:
        return lib[name]
    if name.endswith(".ini") or os.sep in name:
        if os.path.isfile(name):
            return load_scenario(name)
        raise ConfigError(f"scenario file not found: {name}")
    raise ConfigError(
        f"unknown scenario {name!r}; available: {', '.join(sorted(lib))}"
    )


# -- catalog validation -----------------------------------------------------

#: Reference parameters each preset must match.  Accessor keys:
#:   mode, max_steps, arena, pellets, viruses, agent_mass, bot_kinds,
#:   bot_masses, decay, placement, fully_observable, truncate_at_mass,
#:   pellet_regen, virus_regen_interval, ends_on_agent_eaten, ends_on_any_eaten
_CATALOG_REFERENCE: tuple[tuple[str, str, object], ...] = (
    ("mini-1", "mode", "episodic"),
    ("mini-1", "max_steps", 500),
    ("mini-1", "arena", (350.0, 350.0)),
    ("mini-1", "pellets", 500),
    ("mini-1", "viruses", 0),
    ("mini-1", "agent_mass", 25.0),
    ("mini-1", "decay", False),
    ("mini-1", "placement", "square_path"),
    ("mini-2", "max_steps", 500),
    ("mini-2", "agent_mass", 25.0),
    ("mini-2", "decay", True),
    ("mini-2", "placement", "square_path"),
    ("mini-3", "max_steps", 500),
    ("mini-3", "agent_mass", 1000.0),
    ("mini-3", "decay", True),
    ("mini-3", "placement", "square_path"),
    ("mini-4", "max_steps", 3000),
    ("mini-4", "agent_mass", 25.0),
    ("mini-4", "decay", False),
    ("mini-4", "placement", "uniform"),
    ("mini-5", "max_steps", 3000),
    ("mini-5", "decay", True),
    ("mini-6", "max_steps", 3000),
    ("mini-6", "agent_mass", 1000.0),
    ("mini-6", "decay", True),
    ("mini-1c", "mode", "continual"),
    ("mini-1c", "max_steps", None),
    ("mini-1c", "pellets", 500),
    ("mini-1c", "pellet_regen", 600),
    ("mini-3c", "agent_mass", 1000.0),
    ("mini-4c", "truncate_at_mass", GROWTH_CAP_MASS),
    ("mini-4c", "pellets", 500),
    ("mini-5c", "truncate_at_mass", None),
    ("mini-6c", "agent_mass", 1000.0),
    ("mini-4c-sparse", "pellets", 250),
    ("mini-4c-sparse", "truncate_at_mass", GROWTH_CAP_MASS),
    ("mini-5c-sparse", "pellets", 250),
    ("mini-6c-sparse", "pellets", 250),
    ("mini-7-large-dense", "mode", "episodic"),
    ("mini-7-large-dense", "max_steps", 10000),
    ("mini-7-large-dense", "arena", (350.0, 350.0)),
    ("mini-7-large-dense", "pellets", 500),
    ("mini-7-large-dense", "agent_mass", 25.0),
    ("mini-7-large-dense", "bot_kinds", ("hungry",)),
    ("mini-7-large-dense", "bot_masses", (25.0,)),
    ("mini-7-large-dense", "ends_on_agent_eaten", True),
    ("mini-7-small-sparse", "arena", (200.0, 200.0)),
    ("mini-7-small-sparse", "pellets", 250),
    ("mini-7-small-sparse-alt", "pellets", 200),
    ("mini-8-large-dense", "max_steps", 10000),
    ("mini-8-large-dense", "bot_kinds", ("aggressive",)),
    ("mini-8-small-sparse", "arena", (200.0, 200.0)),
    ("mini-8-small-sparse", "pellets", 250),
    ("mini-8-small-sparse-alt", "pellets", 200),
    ("mini-9", "mode", "episodic"),
    ("mini-9", "max_steps", 1000),
    ("mini-9", "pellets", 0),
    ("mini-9", "viruses", 10),
    ("mini-9", "agent_mass", 3000.0),
    ("mini-9", "bot_kinds", ("stationary",)),
    ("mini-9", "bot_masses", (5000.0,)),
    ("mini-9", "decay", False),
    ("mini-9", "fully_observable", True),
    ("mini-9", "virus_regen", False),
    ("mini-9", "ends_on_any_eaten", True),
    ("full", "mode", "continual"),
    ("full", "arena", (350.0, 350.0)),
    ("full", "pellets", 500),
    ("full", "viruses", 10),
    ("full", "bot_count", 8),
    ("full", "agent_mass", 25.0),
    ("full", "decay", True),
    ("full", "pellet_regen", 600),
    ("full", "virus_regen_interval", 1),
    ("full-easy", "pellets", 1024),
    ("full-easy", "pellet_regen", 120),
    ("full-easy", "virus_regen_interval", 120),
    ("full-easy", "bot_count", 8),
    ("full-compact", "arena", (128.0, 128.0)),
    ("full-compact", "pellets", 500),
    ("full-compact", "viruses", 10),
    ("full-compact", "bot_count", 8),
)


def _agent_mass(spec: ScenarioSpec) -> float:
    for p in spec.world.players:
        if p.bot_kind is None:
            return p.initial_mass if p.initial_mass is not None else spec.world.initial_mass
    raise ConfigError("no learning player")


def _lookup(spec: ScenarioSpec, field: str) -> object:
    world = spec.world
    bots = [p for p in world.players if p.bot_kind is not None]
    if field == "mode":
        return spec.mode
    if field == "max_steps":
        return spec.max_steps
    if field == "truncate_at_mass":
        return spec.truncate_at_mass
    if field == "ends_on_agent_eaten":
        return spec.terminate_on_agent_eaten
    if field == "ends_on_any_eaten":
        return spec.terminate_on_any_eaten
    if field == "arena":
        return (world.arena_width, world.arena_height)
    if field == "pellets":
        return world.max_pellets
    if field == "viruses":
        return world.min_viruses
    if field == "agent_mass":
        return _agent_mass(spec)
    if field == "bot_kinds":
        return tuple(p.bot_kind for p in bots)
    if field == "bot_masses":
        return tuple(
            p.initial_mass if p.initial_mass is not None else world.initial_mass
            for p in bots
        )
    if field == "bot_count":
        return len(bots)
    if field == "decay":
        return world.mass_decay_enabled
    if field == "placement":
        return world.pellet_placement
    if field == "fully_observable":
        return world.fully_observable
    if field == "pellet_regen":
        return world.pellet_regen_interval
    if field == "virus_regen":
        return world.virus_regen_enabled
    if field == "virus_regen_interval":
        return world.virus_regen_interval
    raise KeyError(field)


def validate_catalog() -> list[str]:
    """Check every preset against the reference table; report mismatches.

    An empty list means the catalog is intact.  Each entry names the preset
    and field, e.g. ``"mini-9.pellets: expected 0, got 5"``.
    """
    problems: list[str] = []
    lib = scenario_library()
    if len(lib) < 18:
        problems.append(f"catalog: expected >= 18 presets, got {len(lib)}")
    for name, spec in lib.items():
        try:
            spec.validate()
        except ConfigError as exc:
            problems.append(f"{name}: invalid ({exc})")
    for name, field, expected in _CATALOG_REFERENCE:
        if name not in lib:
            problems.append(f"{name}: missing from catalog")
            continue
        actual = _lookup(lib[name], field)
        if actual != expected:
            problems.append(f"{name}.{field}: expected {expected!r}, got {actual!r}")
    return problems


# -- config-file round-trip --------------------------------------------------

_WORLD_INTS = (
    "max_pellets",
    "pellet_regen_interval",
    "min_viruses",
    "decay_interval",
    "cell_cap",
    "virus_split_feeds",
    "obs_resolution",
    "seed",
    "virus_regen_interval",
)
_WORLD_FLOATS = (
    "arena_width",
    "arena_height",
    "decay_rate",
    "initial_mass",
    "mass_floor",
    "noise_std",
    "path_inner_half",
    "path_outer_half",
)
_WORLD_BOOLS = ("mass_decay_enabled", "virus_regen_enabled", "fully_observable")
_WORLD_STRS = ("pellet_placement", "virus_layout")


def scenario_to_ini(spec: ScenarioSpec) -> str:
    """Serialize a spec to the INI config format (schema version
    {SCHEMA_VERSION}); ``scenario_from_ini`` inverts this exactly."""
    parser = configparser.ConfigParser()
    parser["scenario"] = {
        "schema_version": str(SCHEMA_VERSION),
        "name": spec.name,
        "mode": spec.mode,
        "description": spec.description,
        "terminate_on_agent_eaten": str(spec.terminate_on_agent_eaten).lower(),
        "terminate_on_any_eaten": str(spec.terminate_on_any_eaten).lower(),
    }
    if spec.max_steps is not None:
        parser["scenario"]["max_steps"] = str(spec.max_steps)
    if spec.truncate_at_mass is not None:
        parser["scenario"]["truncate_at_mass"] = repr(spec.truncate_at_mass)

    world = spec.world
    section: dict[str, str] = {}
    for field in _WORLD_INTS:
        section[field] = str(getattr(world, field))
    for field in _WORLD_FLOATS:
        section[field] = repr(getattr(world, field))
    for field in _WORLD_BOOLS:
        section[field] = str(getattr(world, field)).lower()
    for field in _WORLD_STRS:
        section[field] = getattr(world, field)
    parser["world"] = section

    players: dict[str, str] = {}
    for i, p in enumerate(world.players):
        kind = "agent" if p.bot_kind is None else p.bot_kind
        if p.initial_mass is not None:
            kind += f" mass={p.initial_mass!r}"
        players[f"player_{i}"] = kind
    parser["players"] = players

    if world.start_positions is not None:
        starts: dict[str, str] = {}
        for i, pos in enumerate(world.start_positions):
            starts[f"player_{i}"] = "-" if pos is None else f"{pos[0]!r} {pos[1]!r}"
        parser["start"] = starts

    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def scenario_from_ini(text: str) -> ScenarioSpec:
    """Parse the INI config format back into a validated ScenarioSpec."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario config: {exc}") from exc
    if "scenario" not in parser or "world" not in parser:
        raise ConfigError("scenario config needs [scenario] and [world] sections")
    meta = parser["scenario"]
    version = meta.getint("schema_version", fallback=-1)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported scenario schema_version {version} "
            f"(this build reads version {SCHEMA_VERSION})"
        )

    w = parser["world"]
    kwargs: dict[str, object] = {}
    try:
        for field in _WORLD_INTS:
            if field in w:
                kwargs[field] = w.getint(field)
        for field in _WORLD_FLOATS:
            if field in w:
                kwargs[field] = w.getfloat(field)
        for field in _WORLD_BOOLS:
            if field in w:
                kwargs[field] = w.getboolean(field)
    except ValueError as exc:
        raise ConfigError(f"bad value in [world]: {exc}") from exc
    for field in _WORLD_STRS:
        if field in w:
            kwargs[field] = w.get(field)
    unknown = set(w) - set(_WORLD_INTS) - set(_WORLD_FLOATS) - set(_WORLD_BOOLS) - set(_WORLD_STRS)
    if unknown:
        raise ConfigError(f"unknown [world] keys: {sorted(unknown)}")

    players: list[PlayerSpec] = []
    if "players" in parser:
        rows = parser["players"]
        for i in range(len(rows)):
            key = f"player_{i}"
            if key not in rows:
                raise ConfigError(f"[players] keys must be player_0..player_{len(rows) - 1}")
            tokens = rows[key].split()
            if not tokens:
                raise ConfigError(f"empty player spec for {key}")
            kind = None if tokens[0] == "agent" else tokens[0]
            if kind is not None and kind not in BOT_KINDS:
                raise ConfigError(f"unknown bot kind {kind!r} for {key}")
            mass: float | None = None
            for extra in tokens[1:]:
                if extra.startswith("mass="):
                    mass = float(extra[5:])
                else:
                    raise ConfigError(f"unknown player attribute {extra!r} for {key}")
            players.append(PlayerSpec(bot_kind=kind, initial_mass=mass))
    kwargs["players"] = tuple(players)

    if "start" in parser:
        rows = parser["start"]
        starts: list[tuple[float, float] | None] = []
        for i in range(len(rows)):
            key = f"player_{i}"
            if key not in rows:
                raise ConfigError(f"[start] keys must be player_0..player_{len(rows) - 1}")
            value = rows[key].strip()
            if value == "-":
                starts.append(None)
            else:
                parts = value.split()
                if len(parts) != 2:
                    raise ConfigError(f"[start] {key} must be 'x y' or '-'")
                starts.append((float(parts[0]), float(parts[1])))
        kwargs["start_positions"] = tuple(starts)

    world = WorldConfig(**kwargs)  # type: ignore[arg-type]

    spec = ScenarioSpec(
        name=meta.get("name", ""),
        world=world,
        mode=meta.get("mode", ""),
        description=meta.get("description", ""),
        max_steps=meta.getint("max_steps") if "max_steps" in meta else None,
        terminate_on_agent_eaten=meta.getboolean("terminate_on_agent_eaten", fallback=False),
        terminate_on_any_eaten=meta.getboolean("terminate_on_any_eaten", fallback=False),
        truncate_at_mass=meta.getfloat("truncate_at_mass") if "truncate_at_mass" in meta else None,
    )
    spec.validate()
    return spec


def save_scenario(spec: ScenarioSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_to_ini(spec))


def load_scenario(path: str) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_ini(fh.read())
