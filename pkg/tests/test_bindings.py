"""Framework-facing bindings: tuple actions, array observations, handle
lifecycle.

The load-bearing oracle: a bound handle is a zero-semantics veneer — the
same seed and action stream produce bit-identical rewards, infos, and
observation buffers as the native environment.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from petridish import bindings
from petridish.dynamics import DiscreteAction
from petridish.env import ActionCommand, env_reset, env_step, make_env
from petridish.errors import ProtocolError
from petridish.scenarios import get_scenario, scenario_to_ini
from petridish.world import Vec2


# -- observations -------------------------------------------------------------------


def test_pixel_observation_shape_and_dtype():
    resolution = get_scenario("mini-1").world.obs_resolution
    with bindings.make("mini-1", seed=0, obs="pixel") as env:
        assert env.observation_shape == (resolution, resolution, 4)
        obs = env.reset()
        assert isinstance(obs, np.ndarray)
        assert obs.shape == (resolution, resolution, 4)
        assert obs.dtype == np.float32


def test_pixel_observation_is_a_zero_copy_view():
    with bindings.make("mini-1", seed=0, obs="pixel") as env:
        env.reset()
        obs = env.render()
        assert obs.base is not None  # a view into the renderer's planes
        again = env.render()
        assert np.array_equal(obs, again)


def test_symbolic_observation_is_a_parsed_dict():
    with bindings.make("mini-5", seed=0, obs="symbolic") as env:
        obs = env.reset()
        assert isinstance(obs, dict)
        assert set(obs) == {"global", "player", "overlap"}
        assert env.observation_shape is None


# -- step API -----------------------------------------------------------------------


def test_step_returns_the_conventional_five_tuple():
    with bindings.make("mini-5", seed=2, obs="symbolic") as env:
        env.reset()
        obs, reward, terminated, truncated, info = env.step((0.25, -0.5, 0))
        assert isinstance(obs, dict)
        assert isinstance(reward, float)
        assert terminated is False and truncated is False
        assert info["tick"] == 4 and info["step"] == 1
        assert {"mass", "deaths", "tick", "step", "events"} <= set(info)


def test_matches_the_native_env_over_300_steps():
    seed = 14
    handle = bindings.make("mini-5", seed=seed, obs="symbolic")
    native = make_env("mini-5", seed=seed, frame_skip=4, obs_mode="symbolic")
    handle.reset()
    env_reset(native)

    rng = np.random.default_rng(99)
    for _ in range(300):
        x = float(rng.uniform(-1, 1))
        y = float(rng.uniform(-1, 1))
        discrete = int(rng.integers(0, 3))
        obs, reward, terminated, truncated, info = handle.step((x, y, discrete))
        result = env_step(
            native, ActionCommand(Vec2(x, y), DiscreteAction(discrete))
        )
        assert reward == result.reward
        assert (terminated, truncated) == (result.terminated, result.truncated)
        assert info["mass"] == result.info["mass"]
        assert info["tick"] == result.info["tick"]
    assert obs == json.loads(native.observe().to_json())
    handle.close()


def test_pixel_buffers_match_the_native_renderer():
    seed = 5
    handle = bindings.make("mini-1", seed=seed, obs="pixel")
    native = make_env("mini-1", seed=seed, frame_skip=4, obs_mode="pixel")
    handle.reset()
    env_reset(native)
    for _ in range(5):
        obs, *_ = handle.step((0.6, 0.1, 0))
        env_step(native, ActionCommand(Vec2(0.6, 0.1), DiscreteAction.NONE))
        assert np.array_equal(obs, native.observe().tensor())
    handle.close()


# -- action validation --------------------------------------------------------------


@pytest.mark.parametrize(
    "action",
    [(0.0, 0.0), (0.0, 0.0, 0, 0), "north", 7, (0.0, 0.0, 3), (0.0, 0.0, -1)],
    ids=["too-short", "too-long", "string", "scalar", "discrete-3", "discrete-neg"],
)
def test_malformed_actions_raise_value_error(action):
    with bindings.make("mini-5", seed=0, obs="symbolic") as env:
        env.reset()
        with pytest.raises(ValueError):
            env.step(action)


def test_out_of_box_cursor_is_a_native_protocol_error():
    with bindings.make("mini-5", seed=0, obs="symbolic") as env:
        env.reset()
        with pytest.raises(ProtocolError):
            env.step((1.5, 0.0, 0))


def test_bad_obs_mode_rejected():
    with pytest.raises(ValueError, match="obs must be one of"):
        bindings.make("mini-1", obs="voxels")


def test_reset_on_a_continual_scenario_is_refused():
    with bindings.make("mini-5c", seed=0, obs="symbolic") as env:
        with pytest.raises(ProtocolError, match="continual"):
            env.reset()


# -- handle lifecycle ---------------------------------------------------------------


def test_closed_handle_raises_runtime_error():
    env = bindings.make("mini-5", seed=0, obs="symbolic")
    env.reset()
    env.close()
    assert env.closed
    env.close()  # idempotent
    for call in (env.reset, env.render, lambda: env.step((0.0, 0.0, 0)),
                 lambda: env.scenario_name, lambda: env.observation_shape):
        with pytest.raises(RuntimeError, match="environment handle is closed"):
            call()


def test_context_manager_closes():
    with bindings.make("mini-5", seed=0, obs="symbolic") as env:
        assert not env.closed
        assert env.scenario_name == "mini-5"
    assert env.closed


def test_handles_are_independent():
    a = bindings.make("mini-5", seed=1, obs="symbolic")
    b = bindings.make("mini-5", seed=1, obs="symbolic")
    a.reset(), b.reset()
    ra = a.step((0.5, 0.0, 0))[1]
    assert a._native().world.tick == 4 and b._native().world.tick == 0
    rb = b.step((0.5, 0.0, 0))[1]
    assert ra == rb  # same seed, same first action
    a.close()
    b.step((0.0, 0.0, 0))  # b is unaffected by closing a
    b.close()


def test_make_accepts_a_scenario_ini_path(tmp_path):
    spec = get_scenario("mini-5")
    path = tmp_path / "copy.ini"
    path.write_text(scenario_to_ini(spec))
    with bindings.make(str(path), seed=3, obs="symbolic") as env:
        assert env.scenario_name == "mini-5"
        env.reset()
        _, reward, *_ = env.step((0.0, 0.0, 0))
    with bindings.make("mini-5", seed=3, obs="symbolic") as ref:
        ref.reset()
        assert ref.step((0.0, 0.0, 0))[1] == reward
