"""Session server: agent lock-step sessions, the shared human arena, and
handshake/error paths.

The load-bearing oracle: an agent session is bit-identical to a local env
fed the same (float32-quantized) action stream — same rewards, ticks, and
observation bytes — and the trajectory it records replays cleanly.
"""

from __future__ import annotations

import asyncio
import json
import struct

import numpy as np
import pytest
from websockets.asyncio.client import connect
from websockets.exceptions import ConnectionClosed

from petridish.dynamics import DiscreteAction
from petridish.env import ActionCommand, env_reset, env_step, make_env
from petridish.protocol import (
    PAYLOAD_PIXEL,
    PAYLOAD_SYMBOLIC,
    ActionMsg,
    ClientHello,
    ErrorMsg,
    FrameMsg,
    ResetMsg,
    ServerConfig,
    SnapshotMsg,
    StatsMsg,
    decode_message,
    encode_message,
)
from petridish.scenarios import ScenarioSpec, scenario_to_ini
from petridish.server import ServeSettings, SessionServer
from petridish.trajectory import replay_trajectory
from petridish.world import PlayerSpec, Vec2, WorldConfig


def _f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


async def _recv(ws, timeout=10.0):
    return decode_message(await asyncio.wait_for(ws.recv(), timeout))


async def _recv_type(ws, kind, timeout=10.0):
    """Read until a message of the wanted type arrives (skipping others)."""
    deadline = asyncio.get_running_loop().time() + timeout
    while True:
        remaining = deadline - asyncio.get_running_loop().time()
        msg = await _recv(ws, timeout=max(0.01, remaining))
        if isinstance(msg, kind):
            return msg


class _Server:
    """Start a SessionServer on an ephemeral port; always tear it down."""

    def __init__(self, **settings):
        settings.setdefault("port", 0)
        self.server = SessionServer(ServeSettings(**settings))

    async def __aenter__(self) -> SessionServer:
        await self.server.start()
        return self.server

    async def __aexit__(self, *exc) -> None:
        await self.server.stop()


def _url(server: SessionServer) -> str:
    return f"ws://127.0.0.1:{server.port}"


def _drift_spec() -> ScenarioSpec:
    """A bot-free continual world where motion is fully deterministic."""
    return ScenarioSpec(
        name="drift-test",
        world=WorldConfig(
            arena_width=300.0,
            arena_height=300.0,
            max_pellets=0,
            min_viruses=0,
            noise_std=0.0,
            obs_resolution=32,
            players=(PlayerSpec(),),
            start_positions=((150.0, 150.0),),
            mass_decay_enabled=False,
            virus_regen_enabled=False,
        ),
        mode="continual",
        max_steps=None,
        description="drifting lone cell for real-time server tests",
    )


def _drift_ini(tmp_path) -> str:
    path = tmp_path / "drift.ini"
    path.write_text(scenario_to_ini(_drift_spec()))
    return str(path)


# -- settings ------------------------------------------------------------------------


def test_settings_mode_dependent_defaults():
    human = ServeSettings(mode="human")
    agent = ServeSettings(mode="agent")
    assert human.resolved_frame_skip() == 1 and human.resolved_obs_mode() == "symbolic"
    assert agent.resolved_frame_skip() == 4 and agent.resolved_obs_mode() == "pixel"
    forced = ServeSettings(mode="human", frame_skip=2, obs_mode="pixel")
    assert forced.resolved_frame_skip() == 2 and forced.resolved_obs_mode() == "pixel"


def test_unknown_mode_refused():
    async def run():
        server = SessionServer(ServeSettings(mode="replay", port=0))
        from petridish.errors import ProtocolError

        with pytest.raises(ProtocolError, match="unknown serve mode"):
            await server.start()

    asyncio.run(run())


# -- agent mode ----------------------------------------------------------------------


def test_agent_lockstep_matches_local_env():
    async def run():
        async with _Server(mode="agent", scenario="mini-1", obs_mode="symbolic") as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(
                    encode_message(ClientHello(role="agent", scenario="mini-5", seed=9))
                )
                config = await _recv(ws)
                assert isinstance(config, ServerConfig)
                assert config.scenario == "mini-5"
                assert config.seed == 9
                assert config.frame_skip == 4
                assert config.obs_mode == "symbolic"
                assert config.mode == "agent"

                local = make_env("mini-5", seed=9, frame_skip=4, obs_mode="symbolic")
                env_reset(local)
                rng = np.random.default_rng(3)
                for i in range(25):
                    x = _f32(float(rng.uniform(-1, 1)))
                    y = _f32(float(rng.uniform(-1, 1)))
                    discrete = int(rng.integers(0, 3))
                    await ws.send(encode_message(ActionMsg(x, y, discrete)))
                    frame = await _recv(ws)
                    assert isinstance(frame, FrameMsg)

                    result = env_step(
                        local, ActionCommand(Vec2(x, y), DiscreteAction(discrete))
                    )
                    assert frame.tick == result.info["tick"] == 4 * (i + 1)
                    assert frame.reward == result.reward
                    assert frame.terminated == result.terminated
                    assert frame.truncated == result.truncated
                    assert frame.payload_kind == PAYLOAD_SYMBOLIC
                    assert frame.payload == local.observe().to_json().encode("utf-8")
                    body = json.loads(frame.payload)
                    assert set(body) == {"global", "player", "overlap"}

    asyncio.run(run())


def test_agent_pixel_frames_carry_the_plane_buffer():
    async def run():
        async with _Server(mode="agent", scenario="mini-1") as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="agent", seed=4)))
                config = await _recv(ws)
                assert config.obs_mode == "pixel"
                res = config.resolution

                local = make_env("mini-1", seed=4, frame_skip=4, obs_mode="pixel")
                env_reset(local)
                for _ in range(2):
                    await ws.send(encode_message(ActionMsg(0.5, -0.25, 0)))
                    frame = await _recv(ws)
                    env_step(
                        local,
                        ActionCommand(Vec2(_f32(0.5), _f32(-0.25)), DiscreteAction.NONE),
                    )
                    assert frame.payload_kind == PAYLOAD_PIXEL
                    assert len(frame.payload) == 4 * res * res * 4  # planes x f32
                    assert frame.payload == local.observe().to_bytes()

    asyncio.run(run())


def test_agent_sessions_record_replayable_trajectories(tmp_path):
    out = str(tmp_path / "remote.traj")

    async def one_session(url, steps, seed):
        async with connect(url, max_size=2**24) as ws:
            await ws.send(
                encode_message(ClientHello(role="agent", scenario="mini-5", seed=seed))
            )
            assert isinstance(await _recv(ws), ServerConfig)
            for i in range(steps):
                await ws.send(encode_message(ActionMsg(0.3, -0.1, 1 if i == 0 else 0)))
                assert isinstance(await _recv(ws), FrameMsg)

    async def run():
        async with _Server(mode="agent", scenario="mini-5", obs_mode="symbolic", out=out) as server:
            await one_session(_url(server), 15, seed=1)
            await one_session(_url(server), 7, seed=2)  # second file gets a suffix

    asyncio.run(run())
    first = replay_trajectory(out)
    assert first.ok, first.message
    assert first.steps_replayed == 15
    second = replay_trajectory(out + ".1")
    assert second.ok, second.message
    assert second.steps_replayed == 7


def test_agent_reset_rebuilds_the_episode():
    async def run():
        async with _Server(mode="agent", scenario="mini-1", obs_mode="symbolic") as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="agent", seed=5)))
                assert isinstance(await _recv(ws), ServerConfig)
                for _ in range(3):
                    await ws.send(encode_message(ActionMsg(0.0, 0.0, 0)))
                    await _recv(ws)
                await ws.send(encode_message(ResetMsg()))
                frame = await _recv(ws)
                assert isinstance(frame, FrameMsg)
                assert frame.tick == 0 and frame.reward == 0.0
                assert frame.payload_kind == PAYLOAD_SYMBOLIC
                await ws.send(encode_message(ActionMsg(0.0, 0.0, 0)))
                after = await _recv(ws)
                assert after.tick == 4

    asyncio.run(run())


def test_agent_reset_refused_while_recording(tmp_path):
    out = str(tmp_path / "locked.traj")

    async def run():
        async with _Server(mode="agent", scenario="mini-5", obs_mode="symbolic", out=out) as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="agent", seed=5)))
                assert isinstance(await _recv(ws), ServerConfig)
                await ws.send(encode_message(ResetMsg()))
                err = await _recv(ws)
                assert isinstance(err, ErrorMsg)
                assert err.code == "reset-refused"
                # session survives the refusal
                await ws.send(encode_message(ActionMsg(0.0, 0.0, 0)))
                assert isinstance(await _recv(ws), FrameMsg)

    asyncio.run(run())


def test_agent_step_failure_is_reported():
    async def run():
        async with _Server(mode="agent", scenario="mini-5", obs_mode="symbolic") as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="agent", seed=5)))
                assert isinstance(await _recv(ws), ServerConfig)
                await ws.send(encode_message(ActionMsg(float("nan"), 0.0, 0)))
                err = await _recv(ws)
                assert isinstance(err, ErrorMsg)
                assert err.code == "step-failed"

    asyncio.run(run())


def test_agent_unexpected_message_type():
    async def run():
        async with _Server(mode="agent", scenario="mini-5", obs_mode="symbolic") as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="agent", seed=5)))
                assert isinstance(await _recv(ws), ServerConfig)
                await ws.send(encode_message(StatsMsg(fps=1.0, mass=1.0, deaths=0)))
                err = await _recv(ws)
                assert err.code == "unexpected-message"

    asyncio.run(run())


# -- handshake rejections ------------------------------------------------------------


async def _expect_rejection(url, first_message: bytes, code: str):
    async with connect(url, max_size=2**24) as ws:
        await ws.send(first_message)
        err = await _recv(ws)
        assert isinstance(err, ErrorMsg), f"wanted an error, got {err}"
        assert err.code == code
        with pytest.raises(ConnectionClosed):
            await asyncio.wait_for(ws.recv(), 10.0)


def test_handshake_rejections():
    async def run():
        async with _Server(mode="agent", scenario="mini-5", obs_mode="symbolic") as server:
            url = _url(server)
            await _expect_rejection(
                url,
                b"\x01" + b'{"version":2,"role":"agent"}',
                "version-mismatch",
            )
            await _expect_rejection(
                url, encode_message(ActionMsg(0.0, 0.0, 0)), "bad-handshake"
            )
            await _expect_rejection(url, b"\xff\x00", "bad-message")
            await _expect_rejection(
                url, encode_message(ClientHello(role="human")), "role-unavailable"
            )
            await _expect_rejection(
                url,
                encode_message(ClientHello(role="agent", scenario="atlantis")),
                "bad-scenario",
            )

    asyncio.run(run())


def test_human_server_rejects_agent_role(tmp_path):
    async def run():
        async with _Server(mode="human", scenario=_drift_ini(tmp_path)) as server:
            await _expect_rejection(
                _url(server),
                encode_message(ClientHello(role="agent")),
                "role-unavailable",
            )

    asyncio.run(run())


# -- human mode ----------------------------------------------------------------------


def test_human_arena_streams_snapshots_and_follows_the_cursor(tmp_path):
    async def run():
        async with _Server(mode="human", scenario=_drift_ini(tmp_path)) as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="human")))
                config = await _recv(ws)
                assert isinstance(config, ServerConfig)
                assert config.mode == "human"
                assert config.frame_skip == 1
                assert config.obs_mode == "symbolic"
                assert config.tick_rate == 60
                assert config.snapshot_cadence == 2
                assert config.arena == (300.0, 300.0)

                await ws.send(encode_message(ActionMsg(1.0, 0.0, 0)))  # hold east
                snaps = []
                while len(snaps) < 12:
                    msg = await _recv(ws)
                    if isinstance(msg, SnapshotMsg):
                        snaps.append(msg.data)

                ticks = [s["global"]["tick"] for s in snaps]
                assert all(t % 2 == 0 for t in ticks), "cadence-2 snapshots"
                assert ticks == sorted(ticks) and ticks[-1] > ticks[0]
                # level-held eastward cursor: the viewport drifts right
                x_first = snaps[0]["player"]["viewport"][0]
                x_last = snaps[-1]["player"]["viewport"][0]
                assert x_last > x_first + 1.0
                self_cells = [
                    e for e in snaps[-1]["overlap"] if e["kind"] == "cell" and e["self"]
                ]
                assert len(self_cells) == 1 and self_cells[0]["mass"] == 25.0

    asyncio.run(run())


def test_human_stats_cadence(tmp_path):
    async def run():
        async with _Server(mode="human", scenario=_drift_ini(tmp_path)) as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="human")))
                await _recv(ws)  # config
                stats = await _recv_type(ws, StatsMsg, timeout=15.0)
                assert stats.fps > 0.0
                assert stats.mass == 25.0
                assert stats.deaths == 0
                assert stats.tick > 0
                assert stats.total_reward == 0.0  # no pellets in the drift world

    asyncio.run(run())


def test_spectators_share_the_stream_and_cannot_steer(tmp_path):
    async def run():
        async with _Server(mode="human", scenario=_drift_ini(tmp_path)) as server:
            url = _url(server)
            async with connect(url, max_size=2**24) as human, connect(
                url, max_size=2**24
            ) as spectator:
                await human.send(encode_message(ClientHello(role="human")))
                assert isinstance(await _recv(human), ServerConfig)
                await spectator.send(encode_message(ClientHello(role="spectator")))
                assert isinstance(await _recv(spectator), ServerConfig)

                # a second human is refused while the seat is held
                async with connect(url, max_size=2**24) as second:
                    await second.send(encode_message(ClientHello(role="human")))
                    err = await _recv(second)
                    assert isinstance(err, ErrorMsg) and err.code == "seat-taken"

                # spectator input is ignored, not fatal
                await spectator.send(encode_message(ActionMsg(-1.0, -1.0, 1)))
                snap_h = await _recv_type(human, SnapshotMsg)
                snap_s = await _recv_type(spectator, SnapshotMsg)
                assert set(snap_h.data) == set(snap_s.data) == {
                    "global", "player", "overlap",
                }

            # seat frees up once the human disconnects
            async with connect(url, max_size=2**24) as again:
                await again.send(encode_message(ClientHello(role="human")))
                assert isinstance(await _recv(again), ServerConfig)

    asyncio.run(run())


def test_human_reset_refused_while_recording_and_log_replays(tmp_path):
    out = str(tmp_path / "humanrun.traj")

    async def run():
        async with _Server(mode="human", scenario=_drift_ini(tmp_path), out=out) as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="human")))
                assert isinstance(await _recv(ws), ServerConfig)
                await ws.send(encode_message(ActionMsg(0.75, 0.0, 0)))
                await _recv_type(ws, SnapshotMsg)
                await ws.send(encode_message(ResetMsg()))
                err = await _recv_type(ws, ErrorMsg)
                assert err.code == "reset-refused"
                await asyncio.sleep(0.3)  # let the arena log some steps

    asyncio.run(run())
    report = replay_trajectory(out)
    assert report.ok, report.message
    assert report.steps_replayed > 0


def test_human_unexpected_message_type(tmp_path):
    async def run():
        async with _Server(mode="human", scenario=_drift_ini(tmp_path)) as server:
            async with connect(_url(server), max_size=2**24) as ws:
                await ws.send(encode_message(ClientHello(role="human")))
                assert isinstance(await _recv(ws), ServerConfig)
                await ws.send(encode_message(StatsMsg(fps=1.0, mass=1.0, deaths=0)))
                err = await _recv_type(ws, ErrorMsg)
                assert err.code == "unexpected-message"

    asyncio.run(run())
