"""Array-first bindings with the conventional RL environment API shape.

This is the surface RL frameworks talk to::

    from petridish import bindings

    env = bindings.make("mini-1", seed=0, obs="pixel")
    obs = env.reset()                      # episodic scenarios
    obs, reward, terminated, truncated, info = env.step((0.3, -0.1, 0))
    env.close()

Actions are plain tuples ``(cursor_x, cursor_y, discrete_index)`` with the
cursor in [-1, 1]² and the discrete index 0 (none), 1 (split) or 2 (eject).
Pixel observations are float32 arrays of shape (N, N, 4) — a zero-copy view
into the renderer's buffer that is only valid until the next ``step`` /
``reset`` / ``render`` call; copy it if you need to keep it.  Symbolic
observations are plain dicts (the documented JSON schema, already parsed).

The bindings add no semantics: every call delegates to the native
environment, so rewards, terminations, and observations are bit-identical
to what the CLI harness produces for the same seed and action stream.
"""

from __future__ import annotations

import json
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import DiscreteAction
from .env import ActionCommand, Env, make_env
from .observation import PixelObservation
from .world import Vec2

Observation = Union[np.ndarray, dict]
StepTuple = tuple[Observation, float, bool, bool, dict]

OBS_MODES = ("pixel", "symbolic")


class BoundEnvHandle:
    """One native environment behind a close-checked facade.

    Handles are single-threaded and independent; open as many as you like,
    but never share one across interpreter threads.
    """

    def __init__(self, env: Env):
        self._env: Optional[Env] = env
        self.obs_mode = env.obs_mode

    # -- plumbing -------------------------------------------------------------

    @property
    def closed(self) -> bool:
        return self._env is None

    def _native(self) -> Env:
        if self._env is None:
            raise RuntimeError("environment handle is closed")
        return self._env

    def close(self) -> None:
        """Release the native environment; all later calls raise."""
        self._env = None

    def __enter__(self) -> "BoundEnvHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- RL API ----------------------------------------------------------------

    @property
    def scenario_name(self) -> str:
        return self._native().scenario.name

    @property
    def observation_shape(self) -> Optional[tuple[int, int, int]]:
        env = self._native()
        if env.obs_mode != "pixel":
            return None
        n = env.scenario.world.obs_resolution
        return (n, n, 4)

    def reset(self) -> Observation:
        """Start the next episode and return its first observation."""
        return _convert(self._native().reset())

    def step(self, action: Sequence) -> StepTuple:
        """Advance one decision (frame_skip ticks) with ``(x, y, discrete)``."""
        env = self._native()
        command = _parse_action(action)
        result = env.step(command)
        return (
            _convert(result.observation),
            result.reward,
            result.terminated,
            result.truncated,
            result.info,
        )

    def render(self) -> Observation:
        """The current observation without advancing the world."""
        return _convert(self._native().observe())


def _parse_action(action: Sequence) -> ActionCommand:
    try:
        x, y, discrete = action
    except (TypeError, ValueError) as exc:
        raise ValueError(
            f"action must be a (cursor_x, cursor_y, discrete) triple, got {action!r}"
        ) from exc
    discrete = int(discrete)
    if not 0 <= discrete <= 2:
        raise ValueError(
            f"discrete index must be 0 (none), 1 (split) or 2 (eject), got {discrete}"
        )
    return ActionCommand(
        cursor=Vec2(float(x), float(y)), discrete=DiscreteAction(discrete)
    )


def _convert(obs) -> Observation:
    if isinstance(obs, PixelObservation):
        # (N, N, 4) float32, zero-copy: valid until the next step/reset/render.
        return obs.tensor()
    return json.loads(obs.to_json())


def make(
    scenario_name: str,
    seed: int = 0,
    obs: str = "pixel",
    frame_skip: int = 4,
    noise_std: Optional[float] = None,
) -> BoundEnvHandle:
    """Open a handle on a scenario preset (or a scenario INI file path)."""
    if obs not in OBS_MODES:
        raise ValueError(f"obs must be one of {OBS_MODES}, got {obs!r}")
    env = make_env(
        scenario_name,
        seed=seed,
        frame_skip=frame_skip,
        obs_mode=obs,
        noise_std=noise_std,
    )
    return BoundEnvHandle(env)
