"""Websocket session server.

Two modes, chosen at startup:

- ``agent`` — lock-step remote control.  Each connection owns a private
  environment: the server blocks on the client's ActionMsg, steps once,
  and answers with exactly one FrameMsg carrying the observation.  The
  recorded trajectory is bit-identical to running the same action stream
  through the local environment.

- ``human`` — one shared real-time arena.  The server advances the world
  at 60 ticks per wall-clock second, applying the latest received cursor
  every step (level-held) and any pending split/eject exactly once
  (edge-triggered).  SnapshotMsg goes out to the player and to all
  spectators at a fixed tick cadence (default: every 2 ticks), StatsMsg
  roughly once a second, and the session can be logged as a replayable
  trajectory with ``--out``.

Sessions never share an environment: each agent connection has its own,
and the human arena's world is mutated only by the arena task — connection
handlers merely swap the latest-input slots and read broadcast queues.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import time
from dataclasses import dataclass
from typing import Optional

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .dynamics import DiscreteAction
from .env import ActionCommand, Env, env_reset, env_step, make_env
from .errors import ProtocolError, SimulationError
from .observation import PixelObservation
from .protocol import (
    PAYLOAD_PIXEL,
    PAYLOAD_SYMBOLIC,
    PROTOCOL_VERSION,
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
from .scenarios import scenario_to_ini
from .trajectory import TrajectoryWriter
from .world import Vec2

TICK_RATE = 60  # world ticks per wall-clock second in human mode


@dataclass
class ServeSettings:
    scenario: str = "full"
    mode: str = "human"
    host: str = "127.0.0.1"
    port: int = 8765
    seed: int = 0
    frame_skip: Optional[int] = None  # None: 1 in human mode, 4 in agent mode
    obs_mode: Optional[str] = None  # None: symbolic in human mode, pixel in agent
    noise_std: Optional[float] = None
    out: Optional[str] = None
    snapshot_cadence: int = 2  # ticks between SnapshotMsg broadcasts

    def resolved_frame_skip(self) -> int:
        if self.frame_skip is not None:
            return self.frame_skip
        return 1 if self.mode == "human" else 4

    def resolved_obs_mode(self) -> str:
        if self.obs_mode is not None:
            return self.obs_mode
        return "symbolic" if self.mode == "human" else "pixel"


def _server_config(env: Env, mode: str, snapshot_cadence: int) -> ServerConfig:
    return ServerConfig(
        scenario=env.scenario.name,
        scenario_ini=scenario_to_ini(env.scenario),
        seed=env.seed,
        frame_skip=env.frame_skip,
        obs_mode=env.obs_mode,
        noise_std=env.noise_std,
        resolution=env.scenario.world.obs_resolution,
        mode=mode,
        snapshot_cadence=snapshot_cadence,
        arena=(env.scenario.world.arena_width, env.scenario.world.arena_height),
        tick_rate=TICK_RATE,
        version=PROTOCOL_VERSION,
    )


def _observation_payload(env: Env) -> tuple[int, bytes]:
    obs = env.observe()
    if isinstance(obs, PixelObservation):
        return PAYLOAD_PIXEL, obs.to_bytes()
    return PAYLOAD_SYMBOLIC, obs.to_json().encode("utf-8")


async def _send_error(ws, code: str, text: str) -> None:
    with contextlib.suppress(ConnectionClosed):
        await ws.send(encode_message(ErrorMsg(code=code, text=text)))


def _offer(queue: asyncio.Queue, item: bytes) -> None:
    """Enqueue dropping the oldest entry when the subscriber lags."""
    while True:
        try:
            queue.put_nowait(item)
            return
        except asyncio.QueueFull:
            try:
                queue.get_nowait()
            except asyncio.QueueEmpty:
                pass


class HumanArena:
    """The shared real-time session of a human-mode server.

    Owns the environment and the trajectory writer; ticks at 60 Hz on the
    event loop; fans out snapshot/stats frames to subscriber queues.
    """

    def __init__(self, settings: ServeSettings):
        self.settings = settings
        self.env = make_env(
            settings.scenario,
            seed=settings.seed,
            frame_skip=settings.resolved_frame_skip(),
            obs_mode=settings.resolved_obs_mode(),
            noise_std=settings.noise_std,
        )
        if self.env.scenario.mode == "episodic":
            env_reset(self.env)
        self.writer = (
            TrajectoryWriter(settings.out, self.env, policy="human")
            if settings.out
            else None
        )
        self.cursor = Vec2(0.0, 0.0)
        self.pending_discrete = DiscreteAction.NONE
        self.subscribers: set[asyncio.Queue] = set()
        self.deaths = 0
        self.steps_done = 0
        self.total_reward = 0.0
        self.closed = False
        self._window_reward = 0.0
        self._task: Optional[asyncio.Task] = None

    # -- connection-side API --------------------------------------------------

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=8)
        self.subscribers.add(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        self.subscribers.discard(queue)

    def submit_action(self, msg: ActionMsg) -> None:
        self.cursor = Vec2(
            min(1.0, max(-1.0, float(msg.cursor_x))),
            min(1.0, max(-1.0, float(msg.cursor_y))),
        )
        if msg.discrete:
            self.pending_discrete = DiscreteAction(msg.discrete)

    def try_reset(self) -> None:
        """Manual reset; refused while recording (the trajectory format can
        only represent the automatic reset that follows a terminal step)."""
        if self.writer is not None:
            raise ProtocolError(
                "session is being recorded: episodes reset automatically"
            )
        env_reset(self.env)

    # -- arena task -----------------------------------------------------------

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self._run())

    async def stop(self) -> None:
        self.closed = True
        if self._task is not None:
            self._task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._task
        if self.writer is not None:
            self.writer.close()
            self.writer = None

    def _broadcast(self, payload: bytes) -> None:
        for queue in self.subscribers:
            _offer(queue, payload)

    def _step_once(self) -> None:
        action = ActionCommand(cursor=self.cursor, discrete=self.pending_discrete)
        self.pending_discrete = DiscreteAction.NONE
        result = env_step(self.env, action)
        if self.writer is not None:
            self.writer.append(action, result)
        self.deaths += result.info["deaths"]
        self.steps_done += 1
        self.total_reward += result.reward
        self._window_reward += result.reward
        if (result.terminated or result.truncated) and (
            self.env.scenario.mode == "episodic"
        ):
            env_reset(self.env)

    async def _run(self) -> None:
        loop = asyncio.get_running_loop()
        step_period = self.env.frame_skip / TICK_RATE
        next_deadline = loop.time()
        window_steps = 0
        window_started = time.perf_counter()
        while not self.closed:
            try:
                self._step_once()
            except SimulationError as exc:
                self._broadcast(
                    encode_message(ErrorMsg(code="arena-failed", text=str(exc)))
                )
                self.closed = True
                break
            window_steps += 1

            if self.env.world.tick % self.settings.snapshot_cadence == 0:
                obs = encode_snapshot(self.env)
                self._broadcast(encode_message(SnapshotMsg(data=obs)))

            elapsed = time.perf_counter() - window_started
            if elapsed >= 1.0:
                stats = StatsMsg(
                    fps=window_steps * self.env.frame_skip / elapsed,
                    mass=self.env.agent.total_mass(),
                    deaths=self.deaths,
                    tick=self.env.world.tick,
                    reward_rate=self._window_reward / elapsed,
                    total_reward=self.total_reward,
                )
                self._broadcast(encode_message(stats))
                window_steps = 0
                self._window_reward = 0.0
                window_started = time.perf_counter()

            next_deadline += step_period
            delay = next_deadline - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                # Fell behind wall clock: rebase rather than bursting.
                next_deadline = loop.time()
                await asyncio.sleep(0)


def encode_snapshot(env: Env) -> dict:
    """Snapshot payload: the symbolic observation (viewport + overlap
    entities), which is exactly what the canvas client renders."""
    from .observation import encode_symbolic

    return json.loads(encode_symbolic(env.world, env.agent).to_json())


class SessionServer:
    """Lifecycle wrapper: bind, accept sessions, tear down cleanly."""

    def __init__(self, settings: ServeSettings):
        self.settings = settings
        self.arena: Optional[HumanArena] = None
        self._server = None
        self._agent_count = 0
        self._human_connected = False

    @property
    def port(self) -> int:
        sockets = self._server.sockets if self._server else None
        if not sockets:
            raise ProtocolError("server is not listening")
        return sockets[0].getsockname()[1]

    async def start(self) -> None:
        if self.settings.mode not in ("agent", "human"):
            raise ProtocolError(f"unknown serve mode: {self.settings.mode!r}")
        if self.settings.mode == "human":
            self.arena = HumanArena(self.settings)
            self.arena.start()
        self._server = await ws_serve(
            self._handle, self.settings.host, self.settings.port, max_size=2**24
        )

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None
        if self.arena is not None:
            await self.arena.stop()
            self.arena = None

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.get_running_loop().create_future()
        finally:
            await self.stop()

    # -- connection handling ----------------------------------------------------

    async def _handle(self, ws) -> None:
        try:
            raw = await ws.recv()
        except ConnectionClosed:
            return
        try:
            hello = decode_message(raw)
        except ProtocolError as exc:
            await _send_error(ws, "bad-message", str(exc))
            await ws.close()
            return
        if not isinstance(hello, ClientHello):
            await _send_error(ws, "bad-handshake", "first message must be a hello")
            await ws.close()
            return
        if hello.version != PROTOCOL_VERSION:
            await _send_error(
                ws,
                "version-mismatch",
                f"server speaks protocol {PROTOCOL_VERSION}, client sent "
                f"{hello.version}",
            )
            await ws.close()
            return

        if self.settings.mode == "agent":
            if hello.role != "agent":
                await _send_error(
                    ws, "role-unavailable", "this server only accepts agent sessions"
                )
                await ws.close()
                return
            await self._run_agent_session(ws, hello)
        else:
            if hello.role == "human":
                await self._run_human_session(ws, player=True)
            elif hello.role == "spectator":
                await self._run_human_session(ws, player=False)
            else:
                await _send_error(
                    ws,
                    "role-unavailable",
                    "this server runs a human arena: connect as human or spectator",
                )
                await ws.close()

    # -- agent mode ---------------------------------------------------------------

    def _agent_out_path(self) -> Optional[str]:
        if not self.settings.out:
            return None
        index = self._agent_count
        self._agent_count += 1
        return self.settings.out if index == 0 else f"{self.settings.out}.{index}"

    async def _run_agent_session(self, ws, hello: ClientHello) -> None:
        try:
            env = make_env(
                hello.scenario or self.settings.scenario,
                seed=self.settings.seed if hello.seed is None else hello.seed,
                frame_skip=self.settings.resolved_frame_skip(),
                obs_mode=self.settings.resolved_obs_mode(),
                noise_std=self.settings.noise_std,
            )
        except SimulationError as exc:
            await _send_error(ws, "bad-scenario", str(exc))
            await ws.close()
            return
        await ws.send(
            encode_message(
                _server_config(env, "agent", self.settings.snapshot_cadence)
            )
        )
        if env.scenario.mode == "episodic":
            env_reset(env)
        out = self._agent_out_path()
        writer = TrajectoryWriter(out, env, policy="remote-agent") if out else None
        try:
            async for raw in ws:
                try:
                    msg = decode_message(raw)
                except ProtocolError as exc:
                    await _send_error(ws, "bad-message", str(exc))
                    break
                if isinstance(msg, ActionMsg):
                    action = ActionCommand(
                        cursor=Vec2(float(msg.cursor_x), float(msg.cursor_y)),
                        discrete=DiscreteAction(msg.discrete),
                    )
                    try:
                        result = env_step(env, action)
                    except SimulationError as exc:
                        await _send_error(ws, "step-failed", str(exc))
                        break
                    if writer is not None:
                        writer.append(action, result)
                    if (result.terminated or result.truncated) and (
                        env.scenario.mode == "episodic"
                    ):
                        env_reset(env)
                    kind, payload = _observation_payload(env)
                    await ws.send(
                        encode_message(
                            FrameMsg(
                                tick=result.info["tick"],
                                reward=result.reward,
                                terminated=result.terminated,
                                truncated=result.truncated,
                                payload_kind=kind,
                                payload=payload,
                            )
                        )
                    )
                elif isinstance(msg, ResetMsg):
                    if writer is not None:
                        await _send_error(
                            ws,
                            "reset-refused",
                            "session is being recorded: episodes reset automatically",
                        )
                        continue
                    try:
                        env_reset(env)
                    except SimulationError as exc:
                        await _send_error(ws, "reset-failed", str(exc))
                        continue
                    kind, payload = _observation_payload(env)
                    await ws.send(
                        encode_message(
                            FrameMsg(
                                tick=env.world.tick,
                                reward=0.0,
                                payload_kind=kind,
                                payload=payload,
                            )
                        )
                    )
                else:
                    await _send_error(
                        ws,
                        "unexpected-message",
                        f"agents send actions or resets, not {type(msg).__name__}",
                    )
                    break
        except ConnectionClosed:
            pass
        finally:
            if writer is not None:
                writer.close()
            await ws.close()

    # -- human mode ---------------------------------------------------------------

    async def _run_human_session(self, ws, player: bool) -> None:
        arena = self.arena
        assert arena is not None
        if player:
            if self._human_connected:
                await _send_error(
                    ws, "seat-taken", "another human is already steering this arena"
                )
                await ws.close()
                return
            self._human_connected = True
        await ws.send(
            encode_message(
                _server_config(arena.env, self.settings.mode, self.settings.snapshot_cadence)
            )
        )
        queue = arena.subscribe()
        sender = asyncio.get_running_loop().create_task(_drain_queue(ws, queue))
        try:
            async for raw in ws:
                try:
                    msg = decode_message(raw)
                except ProtocolError as exc:
                    await _send_error(ws, "bad-message", str(exc))
                    break
                if not player:
                    continue  # spectators are read-only; ignore their messages
                if isinstance(msg, ActionMsg):
                    arena.submit_action(msg)
                elif isinstance(msg, ResetMsg):
                    try:
                        arena.try_reset()
                    except SimulationError as exc:
                        await _send_error(ws, "reset-refused", str(exc))
                else:
                    await _send_error(
                        ws,
                        "unexpected-message",
                        f"humans send actions or resets, not {type(msg).__name__}",
                    )
                    break
        except ConnectionClosed:
            pass
        finally:
            arena.unsubscribe(queue)
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            if player:
                self._human_connected = False
            await ws.close()


async def _drain_queue(ws, queue: asyncio.Queue) -> None:
    try:
        while True:
            payload = await queue.get()
            await ws.send(payload)
    except ConnectionClosed:
        pass


async def serve(
    scenario: str = "full",
    port: int = 8765,
    mode: str = "human",
    seed: int = 0,
    frame_skip: Optional[int] = None,
    obs_mode: Optional[str] = None,
    noise_std: Optional[float] = None,
    out: Optional[str] = None,
    snapshot_cadence: int = 2,
    host: str = "127.0.0.1",
) -> None:
    """Run the session server until cancelled (the ``petridish serve`` entry)."""
    settings = ServeSettings(
        scenario=scenario,
        mode=mode,
        host=host,
        port=port,
        seed=seed,
        frame_skip=frame_skip,
        obs_mode=obs_mode,
        noise_std=noise_std,
        out=out,
        snapshot_cadence=snapshot_cadence,
    )
    server = SessionServer(settings)
    print(f"petridish serve: mode={mode} scenario={scenario} port={port}")
    await server.serve_forever()
