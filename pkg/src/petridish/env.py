"""The RL-facing environment: hybrid actions, frame skip, and mass reward.

One :class:`Env` wraps one world built from a :class:`ScenarioSpec`.  Each
``env_step``:

  1. draws per-component Gaussian actuation noise (std ``noise_std``) from
     the world's RNG stream, adds it to the commanded cursor, and clamps the
     result to [-1, 1]^2 (the draw is skipped entirely when the std is 0);
  2. maps the noisy cursor affinely into the agent's current viewport to a
     world-coordinate target;
  3. holds that control fixed while the simulation advances ``frame_skip``
     ticks (default 4) - the discrete action fires only on the first tick
     of the block, the cursor is level-held, and bots re-decide every tick;
  4. returns reward = (agent total mass after the block) - (before), so
     rewards telescope: over any run without deaths their sum is exactly
     the net mass change, and a death inside a block contributes
     (respawn mass - death mass) through the same difference.

Episodic scenarios truncate at ``max_steps`` and can terminate early when
the agent (or, for scenarios that say so, any player) is eaten; stepping a
finished episode raises :class:`~petridish.errors.ProtocolError` until
``env_reset`` builds the next episode's world from a derived seed.
Continual scenarios never terminate and never rebuild the world;
``env_reset`` on them is always a protocol error.  Scenarios with a
``truncate_at_mass`` threshold set ``truncated`` once the agent's total
mass reaches it (advisory in continual mode - the env keeps stepping).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .bots import bot_decide, bot_kind, decide_all_bots
from .dynamics import ControlInput, DiscreteAction, TickEvents, step_tick
from .errors import ConfigError, ProtocolError
from .observation import (
    PixelObservation,
    SymbolicObservation,
    compute_viewport,
    encode_symbolic,
    render_pixel_obs,
)
from .scenarios import ScenarioSpec, get_scenario
from .world import PlayerState, Vec2, WorldState, create_world, make_rng

from dataclasses import replace as _replace

OBS_MODES = ("pixel", "symbolic")

Observation = Union[PixelObservation, SymbolicObservation]


class ActionCommand(NamedTuple):
    """One agent decision: a cursor in [-1, 1]^2 plus a discrete action."""

    cursor: Vec2
    discrete: DiscreteAction = DiscreteAction.NONE


@dataclass
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict


def _episode_seed(base_seed: int, episode: int) -> int:
    """World seed for episode ``episode`` of an env seeded with
    ``base_seed`` (its own derivation stream, disjoint from the world's)."""
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(2, episode))
    return int(seq.generate_state(1, np.uint64)[0])


class Env:
    """One agent's interface to one running world."""

    def __init__(
        self,
        scenario: ScenarioSpec,
        seed: int,
        frame_skip: int = 4,
        obs_mode: str = "pixel",
        noise_std: Optional[float] = None,
        death_reward_flipped: bool = False,
    ):
        scenario.validate()
        if frame_skip < 1:
            raise ConfigError("frame_skip must be >= 1")
        if obs_mode not in OBS_MODES:
            raise ConfigError(f"obs_mode must be one of {OBS_MODES}")
        self.scenario = scenario
        self.seed = int(seed)
        self.frame_skip = int(frame_skip)
        self.obs_mode = obs_mode
        self.noise_std = float(
            scenario.world.noise_std if noise_std is None else noise_std
        )
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        self.death_reward_flipped = death_reward_flipped
        self.agent_index = next(
            i for i, p in enumerate(scenario.world.players) if p.bot_kind is None
        )
        self.episode_index = 0
        self.step_counter = 0
        self._needs_reset = False
        self._fresh = True
        self.world = self._build_world(self.episode_index)

    # -- lifecycle ----------------------------------------------------------

    def _build_world(self, episode: int) -> WorldState:
        config = _replace(
            self.scenario.world, seed=_episode_seed(self.seed, episode)
        )
        return create_world(config)

    @property
    def agent(self) -> PlayerState:
        return self.world.players[self.agent_index]

    def observe(self) -> Observation:
        """The current observation, without advancing the world."""
        if self.obs_mode == "pixel":
            return render_pixel_obs(self.world, self.agent)
        return encode_symbolic(self.world, self.agent)

    def reset(self) -> Observation:
        """Start the next episode (episodic scenarios only).

        The first reset on an unstepped env returns the already-built
        episode-0 world; later resets rebuild from the next derived seed.
        """
        if self.scenario.mode != "episodic":
            raise ProtocolError(
                f"scenario {self.scenario.name!r} is continual: there are no "
                "episode resets"
            )
        if self._fresh and self.step_counter == 0:
            self._fresh = False
            return self.observe()
        self.episode_index += 1
        self.world = self._build_world(self.episode_index)
        self.step_counter = 0
        self._needs_reset = False
        self._fresh = False
        return self.observe()

    # -- stepping -----------------------------------------------------------

    def _noisy_cursor(self, cursor: Vec2) -> Vec2:
        cx = float(cursor.x)
        cy = float(cursor.y)
        if not (-1.0 <= cx <= 1.0 and -1.0 <= cy <= 1.0):
            raise ProtocolError(f"cursor {cursor} outside [-1, 1]^2")
        if self.noise_std > 0.0:
            noise = self.world.rng.normal(0.0, self.noise_std, size=2)
            cx = min(1.0, max(-1.0, cx + float(noise[0])))
            cy = min(1.0, max(-1.0, cy + float(noise[1])))
        return Vec2(cx, cy)

    def step(self, action: ActionCommand) -> StepResult:
        if self._needs_reset:
            raise ProtocolError(
                "episode is over: call reset() before stepping again"
            )
        discrete = DiscreteAction(action.discrete)
        cursor = self._noisy_cursor(action.cursor)
        viewport = compute_viewport(self.world, self.agent)
        target = Vec2(
            viewport.center.x + cursor.x * viewport.side / 2.0,
            viewport.center.y + cursor.y * viewport.side / 2.0,
        )

        mass_before = self.agent.total_mass()
        block_events: list[TickEvents] = []
        for i in range(self.frame_skip):
            controls = [
                ControlInput(
                    self.agent_index,
                    target,
                    discrete if i == 0 else DiscreteAction.NONE,
                )
            ]
            controls.extend(decide_all_bots(self.world))
            block_events.append(step_tick(self.world, controls))
        mass_after = self.agent.total_mass()

        agent_deaths = [
            (player, mass)
            for ev in block_events
            for player, mass in ev.deaths
            if player == self.agent_index
        ]
        any_death = any(ev.deaths for ev in block_events)

        reward = mass_after - mass_before
        if self.death_reward_flipped:
            initial = self.agent.initial_mass
            for _, death_mass in agent_deaths:
                reward += 2.0 * (death_mass - initial)

        self.step_counter += 1
        self._fresh = False

        terminated = False
        truncated = False
        if self.scenario.mode == "episodic":
            if self.scenario.terminate_on_agent_eaten and agent_deaths:
                terminated = True
            if self.scenario.terminate_on_any_eaten and any_death:
                terminated = True
            assert self.scenario.max_steps is not None
            if self.step_counter >= self.scenario.max_steps:
                truncated = True
        if (
            self.scenario.truncate_at_mass is not None
            and mass_after >= self.scenario.truncate_at_mass
        ):
            truncated = True
        if self.scenario.mode == "episodic" and (terminated or truncated):
            self._needs_reset = True

        info = {
            "mass": mass_after,
            "deaths": len(agent_deaths),
            "tick": self.world.tick,
            "step": self.step_counter,
            "events": summarize_events(block_events),
        }
        return StepResult(self.observe(), reward, terminated, truncated, info)


def summarize_events(block: list[TickEvents]) -> dict:
    """Counts of everything that happened across a block of ticks."""
    return {
        "pellets_eaten": sum(
            1 for ev in block for _, eaten, _ in ev.eats if eaten.kind == "pellet"
        ),
        "blobs_eaten": sum(
            1 for ev in block for _, eaten, _ in ev.eats if eaten.kind == "blob"
        ),
        "cells_eaten": sum(
            1 for ev in block for _, eaten, _ in ev.eats if eaten.kind == "cell"
        ),
        "viruses_eaten": sum(
            1 for ev in block for _, eaten, _ in ev.eats if eaten.kind == "virus"
        ),
        "deaths": sum(len(ev.deaths) for ev in block),
        "splits": sum(len(ev.splits) for ev in block),
        "merges": sum(len(ev.merges) for ev in block),
        "ejects": sum(len(ev.ejects) for ev in block),
        "virus_pops": sum(len(ev.virus_pops) for ev in block),
        "decay_loss": sum(ev.decay_loss for ev in block),
        "pellets_spawned": sum(ev.pellets_spawned for ev in block),
    }


def make_env(
    scenario: Union[str, ScenarioSpec],
    seed: int = 0,
    frame_skip: int = 4,
    obs_mode: str = "pixel",
    noise_std: Optional[float] = None,
    death_reward_flipped: bool = False,
) -> Env:
    """Build an environment from a preset name or an explicit spec."""
    spec = get_scenario(scenario) if isinstance(scenario, str) else scenario
    return Env(
        spec,
        seed,
        frame_skip=frame_skip,
        obs_mode=obs_mode,
        noise_std=noise_std,
        death_reward_flipped=death_reward_flipped,
    )


def env_step(env: Env, action: ActionCommand) -> StepResult:
    return env.step(action)


def env_reset(env: Env) -> Observation:
    return env.reset()


# -- reference policies -------------------------------------------------------
#
# A policy is a callable taking the Env and returning an ActionCommand.


class StationaryPolicy:
    """Aims at the viewport center (the agent's own centroid): stands still
    in the absence of actuation noise, never splits or ejects."""

    def __call__(self, env: Optional[Env] = None) -> ActionCommand:
        return ActionCommand(Vec2(0.0, 0.0), DiscreteAction.NONE)


class RandomPolicy:
    """Uniform random baseline: cursor uniform over [-1, 1]^2 and discrete
    action uniform over {none, split, eject}, from a dedicated RNG stream."""

    def __init__(self, seed: int):
        self.rng = make_rng(seed, stream=1)

    def __call__(self, env: Optional[Env] = None) -> ActionCommand:
        u = self.rng.uniform(-1.0, 1.0, size=2)
        discrete = DiscreteAction(int(self.rng.integers(0, 3)))
        return ActionCommand(Vec2(float(u[0]), float(u[1])), discrete)


class BotMimicPolicy:
    """Drives the learning agent with one of the heuristic bot policies,
    mapping the bot's world-coordinate target back into the [-1, 1]^2
    cursor space of the agent's current viewport."""

    def __init__(self, kind: str):
        self.kind = bot_kind(kind)

    def __call__(self, env: Env) -> ActionCommand:
        control = bot_decide(self.kind, env.world, env.agent)
        viewport = compute_viewport(env.world, env.agent)
        half = viewport.side / 2.0
        cx = min(1.0, max(-1.0, (control.cursor_world.x - viewport.center.x) / half))
        cy = min(1.0, max(-1.0, (control.cursor_world.y - viewport.center.y) / half))
        return ActionCommand(Vec2(cx, cy), DiscreteAction.NONE)


def make_policy(name: str, seed: int) -> Callable[[Env], ActionCommand]:
    """Build a named policy: ``random``, ``stationary``, or ``bot:<kind>``."""
    if name == "stationary":
        return StationaryPolicy()
    if name == "random":
        return RandomPolicy(seed)
    if name.startswith("bot:"):
        return BotMimicPolicy(name[4:])
    raise ConfigError(
        f"unknown policy {name!r} (choose random, stationary, or bot:<kind>)"
    )
