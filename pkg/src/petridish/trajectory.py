"""Trajectory files: record an env run, replay it, verify determinism.

File layout (version 1):

  1. header - one JSON line (UTF-8, ends with ``\\n``) carrying the
     scenario (name plus its full embedded config), env seed, frame skip,
     observation mode, noise std, the world's starting state hash, and the
     hash cadence;
  2. step records - fixed-size 50-byte little-endian structs
     ``<q d d B B d d Q``: tick after the step, commanded cursor x and y
     (pre-noise, exactly as the policy emitted them), discrete action,
     flags (bit0 terminated, bit1 truncated, bit2 state-hash present),
     reward, agent total mass, and the world state hash (0 when absent);
  3. trailer - magic ``PDTRAILR``, a JSON blob with the step count, the
     final state hash, and a step->hash index, a little-endian uint32 JSON
     length, and closing magic ``PDTRAJEN``.

Fixed-size records plus a rewritable trailer make the format append-safe
for long continual runs: seek to the trailer, truncate, append records,
rewrite the trailer.

Replaying rebuilds the env from the header, feeds the recorded actions
back, and compares rewards, masses, done flags, and every stored state
hash bit-exactly; the first mismatch is reported with its step and tick.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Optional, Union

from .dynamics import DiscreteAction
from .env import ActionCommand, Env, StepResult, make_env
from .errors import TrajectoryError
from .scenarios import ScenarioSpec, scenario_from_ini, scenario_to_ini
from .world import Vec2, state_hash

FORMAT_NAME = "petridish-trajectory"
FORMAT_VERSION = 1
DEFAULT_HASH_EVERY = 50

_STEP = struct.Struct("<qddBBddQ")
_TRAILER_LEN = struct.Struct("<I")
_TRAILER_MAGIC = b"PDTRAILR"
_END_MAGIC = b"PDTRAJEN"

FLAG_TERMINATED = 0x01
FLAG_TRUNCATED = 0x02
FLAG_HAS_HASH = 0x04


@dataclass
class StepRow:
    index: int
    tick: int
    cursor: tuple[float, float]
    discrete: int
    reward: float
    mass: float
    terminated: bool
    truncated: bool
    state_hash: Optional[int]


@dataclass
class TrajectoryRecord:
    """A parsed trajectory file."""

    scenario_name: str
    scenario: ScenarioSpec
    config_digest: str
    initial_hash: int
    seed: int
    frame_skip: int
    obs_mode: str
    noise_std: float
    policy: Optional[str]
    hash_every: int
    auto_reset: bool
    final_hash: Optional[int]
    steps: list[StepRow]


class TrajectoryWriter:
    """Streams one env run to disk; use as a context manager."""

    def __init__(
        self,
        path: str,
        env: Env,
        policy: Optional[str] = None,
        hash_every: int = DEFAULT_HASH_EVERY,
        auto_reset: bool = True,
    ):
        if hash_every < 1:
            raise TrajectoryError("hash_every must be >= 1")
        self.path = path
        self.env = env
        self.hash_every = hash_every
        self._count = 0
        self._hash_index: list[tuple[int, str]] = []
        self._closed = False
        header = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "scenario": env.scenario.name,
            "scenario_config": scenario_to_ini(env.scenario),
            "config_digest": env.world.config.digest(),
            "initial_hash": f"{state_hash(env.world):016x}",
            "seed": env.seed,
            "frame_skip": env.frame_skip,
            "obs_mode": env.obs_mode,
            "noise_std": env.noise_std,
            "policy": policy,
            "hash_every": hash_every,
            "auto_reset": auto_reset,
        }
        try:
            self._fh = open(path, "wb")
        except OSError as exc:
            raise TrajectoryError(f"cannot write trajectory {path!r}: {exc}") from exc
        self._fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        self._fh.write(b"\n")

    def append(self, action: ActionCommand, result: StepResult) -> None:
        """Record one step (call right after ``env.step(action)``)."""
        if self._closed:
            raise TrajectoryError("trajectory writer already closed")
        flags = 0
        if result.terminated:
            flags |= FLAG_TERMINATED
        if result.truncated:
            flags |= FLAG_TRUNCATED
        digest = 0
        if (self._count + 1) % self.hash_every == 0:
            digest = state_hash(self.env.world)
            flags |= FLAG_HAS_HASH
            self._hash_index.append((self._count, f"{digest:016x}"))
        self._fh.write(
            _STEP.pack(
                self.env.world.tick,
                float(action.cursor[0]),
                float(action.cursor[1]),
                int(action.discrete),
                flags,
                result.reward,
                result.info["mass"],
                digest,
            )
        )
        self._count += 1

    def close(self) -> None:
        if self._closed:
            return
        trailer = {
            "steps": self._count,
            "final_hash": f"{state_hash(self.env.world):016x}",
            "hash_index": self._hash_index,
        }
        blob = json.dumps(trailer, separators=(",", ":")).encode("utf-8")
        self._fh.write(_TRAILER_MAGIC)
        self._fh.write(blob)
        self._fh.write(_TRAILER_LEN.pack(len(blob)))
        self._fh.write(_END_MAGIC)
        self._fh.close()
        self._closed = True

    def __enter__(self) -> "TrajectoryWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trajectory(path: str) -> TrajectoryRecord:
    """Parse a trajectory file, checking framing and counts."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise TrajectoryError(f"cannot read trajectory {path!r}: {exc}") from exc

    newline = data.find(b"\n")
    if newline < 0:
        raise TrajectoryError(f"{path}: missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TrajectoryError(f"{path}: malformed header: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise TrajectoryError(f"{path}: not a trajectory file")
    if header.get("version") != FORMAT_VERSION:
        raise TrajectoryError(
            f"{path}: unsupported version {header.get('version')} "
            f"(this build reads {FORMAT_VERSION})"
        )

    body = data[newline + 1 :]
    final_hash: Optional[int] = None
    declared_steps: Optional[int] = None
    if body.endswith(_END_MAGIC):
        length_at = len(body) - len(_END_MAGIC) - _TRAILER_LEN.size
        if length_at < 0:
            raise TrajectoryError(f"{path}: truncated trailer")
        (blob_len,) = _TRAILER_LEN.unpack(
            body[length_at : length_at + _TRAILER_LEN.size]
        )
        blob_at = length_at - blob_len
        magic_at = blob_at - len(_TRAILER_MAGIC)
        if magic_at < 0 or body[magic_at:blob_at] != _TRAILER_MAGIC:
            raise TrajectoryError(f"{path}: corrupt trailer framing")
        try:
            trailer = json.loads(body[blob_at : blob_at + blob_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise TrajectoryError(f"{path}: malformed trailer: {exc}") from exc
        final_hash = int(trailer["final_hash"], 16)
        declared_steps = int(trailer["steps"])
        body = body[:magic_at]
    # No trailer: the run is still in progress (or was cut off); the fixed
    # record size still lets us read every complete step.

    if len(body) % _STEP.size != 0:
        raise TrajectoryError(
            f"{path}: step region is {len(body)} bytes, "
            f"not a multiple of {_STEP.size}"
        )
    steps: list[StepRow] = []
    for index in range(len(body) // _STEP.size):
        tick, cx, cy, discrete, flags, reward, mass, digest = _STEP.unpack_from(
            body, index * _STEP.size
        )
        steps.append(
            StepRow(
                index=index,
                tick=tick,
                cursor=(cx, cy),
                discrete=discrete,
                reward=reward,
                mass=mass,
                terminated=bool(flags & FLAG_TERMINATED),
                truncated=bool(flags & FLAG_TRUNCATED),
                state_hash=digest if flags & FLAG_HAS_HASH else None,
            )
        )
    if declared_steps is not None and declared_steps != len(steps):
        raise TrajectoryError(
            f"{path}: trailer declares {declared_steps} steps, found {len(steps)}"
        )

    return TrajectoryRecord(
        scenario_name=header["scenario"],
        scenario=scenario_from_ini(header["scenario_config"]),
        config_digest=header["config_digest"],
        initial_hash=int(header["initial_hash"], 16),
        seed=header["seed"],
        frame_skip=header["frame_skip"],
        obs_mode=header["obs_mode"],
        noise_std=header["noise_std"],
        policy=header.get("policy"),
        hash_every=header["hash_every"],
        auto_reset=header.get("auto_reset", True),
        final_hash=final_hash,
        steps=steps,
    )


@dataclass
class ReplayReport:
    ok: bool
    steps_replayed: int
    hashes_checked: int
    divergence_step: Optional[int]
    divergence_tick: Optional[int]
    message: str


def replay_trajectory(source: Union[str, TrajectoryRecord]) -> ReplayReport:
    """Re-run a recorded trajectory and verify it reproduces bit-exactly."""
    record = read_trajectory(source) if isinstance(source, str) else source

    env = make_env(
        record.scenario,
        seed=record.seed,
        frame_skip=record.frame_skip,
        obs_mode=record.obs_mode,
        noise_std=record.noise_std,
    )
    if env.world.config.digest() != record.config_digest:
        return ReplayReport(
            False, 0, 0, 0, env.world.tick,
            "divergence at step 0: rebuilt world config digest "
            f"{env.world.config.digest()} != recorded {record.config_digest}",
        )
    if env.scenario.mode == "episodic":
        env.reset()
    if state_hash(env.world) != record.initial_hash:
        return ReplayReport(
            False, 0, 0, 0, env.world.tick,
            "divergence at step 0: initial state hash mismatch",
        )

    hashes = 0
    for row in record.steps:
        result = env.step(
            ActionCommand(
                Vec2(row.cursor[0], row.cursor[1]), DiscreteAction(row.discrete)
            )
        )

        def diverged(what: str) -> ReplayReport:
            return ReplayReport(
                False, row.index, hashes, row.index, env.world.tick,
                f"divergence at step {row.index} (tick {env.world.tick}): {what}",
            )

        if result.reward != row.reward:
            return diverged(f"reward {result.reward!r} != recorded {row.reward!r}")
        if result.info["mass"] != row.mass:
            return diverged(f"mass {result.info['mass']!r} != recorded {row.mass!r}")
        if result.terminated != row.terminated or result.truncated != row.truncated:
            return diverged("done flags differ")
        if row.state_hash is not None:
            if state_hash(env.world) != row.state_hash:
                return diverged("state hash mismatch")
            hashes += 1
        if (
            (result.terminated or result.truncated)
            and record.auto_reset
            and env.scenario.mode == "episodic"
            and row.index + 1 < len(record.steps)
        ):
            env.reset()

    if record.final_hash is not None:
        if state_hash(env.world) != record.final_hash:
            return ReplayReport(
                False, len(record.steps), hashes, len(record.steps), env.world.tick,
                "divergence at end: final state hash mismatch",
            )
        hashes += 1

    return ReplayReport(
        True, len(record.steps), hashes, None, None,
        f"ok: {len(record.steps)} steps replayed, {hashes} hashes verified",
    )
