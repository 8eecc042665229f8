"""petridish: a deterministic petri-dish arena for continual reinforcement learning.

Players steer colonies of circular cells around a bounded dish, absorbing
pellets and smaller rivals while splitting, ejecting mass, and dodging
spore-filled viruses.  The simulator is tick-exact and fully reproducible:
identical seeds and inputs give bit-identical worlds, observations, and
trajectories.

Layers, lowest first:

- :mod:`petridish.world` — entities, configuration, RNG streams, state hash.
- :mod:`petridish.dynamics` — the fixed-order per-tick update pipeline.
- :mod:`petridish.observation` — pixel planes and symbolic encodings.
- :mod:`petridish.bots` — scripted opponents.
- :mod:`petridish.scenarios` — the preset library and INI round-trip.
- :mod:`petridish.env` — the step/reset decision-level interface.
- :mod:`petridish.trajectory` — record/replay of action streams.
- :mod:`petridish.bindings` — array-first wrapper for RL frameworks.
- :mod:`petridish.protocol` / :mod:`petridish.server` — websocket sessions.
- :mod:`petridish.cli` — the ``petridish`` command.
"""

from .bots import BOT_KINDS, bot_decide, bot_kind, decide_all_bots
from .dynamics import (
    EAT_RATIO,
    EJECT_COST,
    ControlInput,
    DiscreteAction,
    TickEvents,
    merge_cooldown,
    step_tick,
)
from .env import (
    Env,
    ActionCommand,
    StepResult,
    env_reset,
    env_step,
    make_env,
    make_policy,
)
from .errors import (
    ConfigError,
    InputError,
    ProtocolError,
    SimulationError,
    TrajectoryError,
    WorldConstructionError,
)
from .observation import (
    PixelObservation,
    SymbolicObservation,
    compute_viewport,
    encode_symbolic,
    render_pixel_obs,
)
from .scenarios import (
    ScenarioSpec,
    get_scenario,
    load_scenario,
    save_scenario,
    scenario_from_ini,
    scenario_library,
    scenario_to_ini,
)
from .trajectory import (
    ReplayReport,
    TrajectoryWriter,
    read_trajectory,
    replay_trajectory,
)
from .world import (
    TICKS_PER_SECOND,
    PlayerSpec,
    Vec2,
    WorldConfig,
    WorldState,
    create_world,
    make_rng,
    radius_of,
    speed_of,
    state_hash,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SimulationError",
    "ConfigError",
    "WorldConstructionError",
    "InputError",
    "TrajectoryError",
    "ProtocolError",
    # world
    "TICKS_PER_SECOND",
    "Vec2",
    "PlayerSpec",
    "WorldConfig",
    "WorldState",
    "create_world",
    "state_hash",
    "make_rng",
    "radius_of",
    "speed_of",
    # dynamics
    "EAT_RATIO",
    "EJECT_COST",
    "DiscreteAction",
    "ControlInput",
    "TickEvents",
    "step_tick",
    "merge_cooldown",
    # observation
    "PixelObservation",
    "SymbolicObservation",
    "compute_viewport",
    "render_pixel_obs",
    "encode_symbolic",
    # bots
    "BOT_KINDS",
    "bot_kind",
    "bot_decide",
    "decide_all_bots",
    # scenarios
    "ScenarioSpec",
    "scenario_library",
    "get_scenario",
    "scenario_to_ini",
    "scenario_from_ini",
    "save_scenario",
    "load_scenario",
    # env
    "Env",
    "ActionCommand",
    "StepResult",
    "make_env",
    "env_step",
    "env_reset",
    "make_policy",
    # trajectory
    "TrajectoryWriter",
    "read_trajectory",
    "replay_trajectory",
    "ReplayReport",
]
