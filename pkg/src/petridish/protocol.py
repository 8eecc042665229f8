"""Wire protocol for the session server and its clients.

Every message is one binary websocket frame laid out as::

    [ type : u8 ][ payload ... ]

All integers are little-endian.  There are two payload encodings: packed
structs for the hot path (actions, frame headers) and UTF-8 JSON for
everything negotiated once or sent at human timescales.  The protocol is
version-tagged: clients state their version in the hello, the server
echoes its own in the config message, and a mismatch is an error.

Message catalog (type byte, payload):

========  ==============  =====================================================
``0x01``  ClientHello     JSON ``{version, role, scenario?, seed?, name?}``
``0x02``  ServerConfig    JSON ``{version, scenario, scenario_ini, seed,
                          frame_skip, obs_mode, noise_std, resolution,
                          tick_rate, mode, snapshot_cadence, arena}``
``0x03``  Action          struct ``<ffB``: cursor x, cursor y (float32 in
                          [-1, 1]), discrete action (0 none / 1 split /
                          2 eject)
``0x04``  Frame           struct ``<QdBBI``: tick u64, reward f64, flags u8
                          (bit0 terminated, bit1 truncated), payload kind u8,
                          payload length u32 — then that many payload bytes.
                          Kind 0 = none, 1 = raw pixel float32 plane-major
                          buffer, 2 = symbolic-observation JSON.
``0x05``  Snapshot        JSON — a symbolic observation (viewport + overlap
                          entity list) for client-side vector rendering
``0x06``  Stats           JSON ``{fps, mass, deaths, tick, reward_rate,
                          total_reward}``
``0x07``  Reset           empty
``0x08``  Error           JSON ``{code, text}``
========  ==============  =====================================================
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ProtocolError

PROTOCOL_VERSION = 1

MSG_HELLO = 0x01
MSG_SERVER_CONFIG = 0x02
MSG_ACTION = 0x03
MSG_FRAME = 0x04
MSG_SNAPSHOT = 0x05
MSG_STATS = 0x06
MSG_RESET = 0x07
MSG_ERROR = 0x08

PAYLOAD_NONE = 0
PAYLOAD_PIXEL = 1
PAYLOAD_SYMBOLIC = 2

FRAME_FLAG_TERMINATED = 0x01
FRAME_FLAG_TRUNCATED = 0x02

ROLES = ("agent", "human", "spectator")

_ACTION = struct.Struct("<ffB")
_FRAME = struct.Struct("<QdBBI")


@dataclass(frozen=True)
class ClientHello:
    role: str
    version: int = PROTOCOL_VERSION
    scenario: Optional[str] = None
    seed: Optional[int] = None
    name: str = ""


@dataclass(frozen=True)
class ServerConfig:
    scenario: str
    scenario_ini: str
    seed: int
    frame_skip: int
    obs_mode: str
    noise_std: float
    resolution: int
    mode: str
    snapshot_cadence: int
    arena: tuple[float, float]
    tick_rate: int = 60
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class ActionMsg:
    cursor_x: float
    cursor_y: float
    discrete: int = 0


@dataclass(frozen=True)
class FrameMsg:
    tick: int
    reward: float
    terminated: bool = False
    truncated: bool = False
    payload_kind: int = PAYLOAD_NONE
    payload: bytes = b""


@dataclass(frozen=True)
class SnapshotMsg:
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StatsMsg:
    fps: float
    mass: float
    deaths: int
    tick: int = 0
    reward_rate: float = 0.0
    total_reward: float = 0.0


@dataclass(frozen=True)
class ResetMsg:
    pass


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    text: str


WireMessage = Union[
    ClientHello,
    ServerConfig,
    ActionMsg,
    FrameMsg,
    SnapshotMsg,
    StatsMsg,
    ResetMsg,
    ErrorMsg,
]


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


def encode_message(msg: WireMessage) -> bytes:
    """Serialize a message to one binary websocket frame."""
    if isinstance(msg, ClientHello):
        body = {"version": msg.version, "role": msg.role}
        if msg.scenario is not None:
            body["scenario"] = msg.scenario
        if msg.seed is not None:
            body["seed"] = msg.seed
        if msg.name:
            body["name"] = msg.name
        return bytes([MSG_HELLO]) + _json_bytes(body)
    if isinstance(msg, ServerConfig):
        body = {
            "version": msg.version,
            "scenario": msg.scenario,
            "scenario_ini": msg.scenario_ini,
            "seed": msg.seed,
            "frame_skip": msg.frame_skip,
            "obs_mode": msg.obs_mode,
            "noise_std": msg.noise_std,
            "resolution": msg.resolution,
            "tick_rate": msg.tick_rate,
            "mode": msg.mode,
            "snapshot_cadence": msg.snapshot_cadence,
            "arena": [msg.arena[0], msg.arena[1]],
        }
        return bytes([MSG_SERVER_CONFIG]) + _json_bytes(body)
    if isinstance(msg, ActionMsg):
        if not 0 <= msg.discrete <= 2:
            raise ProtocolError(f"discrete action out of range: {msg.discrete}")
        return bytes([MSG_ACTION]) + _ACTION.pack(
            msg.cursor_x, msg.cursor_y, msg.discrete
        )
    if isinstance(msg, FrameMsg):
        flags = (FRAME_FLAG_TERMINATED if msg.terminated else 0) | (
            FRAME_FLAG_TRUNCATED if msg.truncated else 0
        )
        header = _FRAME.pack(
            msg.tick, msg.reward, flags, msg.payload_kind, len(msg.payload)
        )
        return bytes([MSG_FRAME]) + header + msg.payload
    if isinstance(msg, SnapshotMsg):
        return bytes([MSG_SNAPSHOT]) + _json_bytes(msg.data)
    if isinstance(msg, StatsMsg):
        body = {
            "fps": msg.fps,
            "mass": msg.mass,
            "deaths": msg.deaths,
            "tick": msg.tick,
            "reward_rate": msg.reward_rate,
            "total_reward": msg.total_reward,
        }
        return bytes([MSG_STATS]) + _json_bytes(body)
    if isinstance(msg, ResetMsg):
        return bytes([MSG_RESET])
    if isinstance(msg, ErrorMsg):
        return bytes([MSG_ERROR]) + _json_bytes({"code": msg.code, "text": msg.text})
    raise ProtocolError(f"cannot encode {type(msg).__name__}")


def _decode_json(kind: str, payload: bytes) -> dict:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed {kind} payload: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError(f"malformed {kind} payload: expected a JSON object")
    return obj


def decode_message(data: bytes) -> WireMessage:
    """Parse one binary websocket frame into a message.

    Raises :class:`ProtocolError` for unknown types, short payloads, or
    malformed JSON.
    """
    if not isinstance(data, (bytes, bytearray)):
        raise ProtocolError("wire messages must be binary frames")
    if len(data) < 1:
        raise ProtocolError("empty wire message")
    mtype, payload = data[0], bytes(data[1:])

    if mtype == MSG_HELLO:
        body = _decode_json("hello", payload)
        role = body.get("role")
        if role not in ROLES:
            raise ProtocolError(f"unknown role: {role!r}")
        version = body.get("version")
        if not isinstance(version, int):
            raise ProtocolError("hello is missing an integer version")
        seed = body.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ProtocolError("hello seed must be an integer")
        return ClientHello(
            role=role,
            version=version,
            scenario=body.get("scenario"),
            seed=seed,
            name=str(body.get("name", "")),
        )
    if mtype == MSG_SERVER_CONFIG:
        body = _decode_json("server-config", payload)
        try:
            return ServerConfig(
                scenario=body["scenario"],
                scenario_ini=body["scenario_ini"],
                seed=body["seed"],
                frame_skip=body["frame_skip"],
                obs_mode=body["obs_mode"],
                noise_std=body["noise_std"],
                resolution=body["resolution"],
                tick_rate=body["tick_rate"],
                mode=body["mode"],
                snapshot_cadence=body["snapshot_cadence"],
                arena=(body["arena"][0], body["arena"][1]),
                version=body["version"],
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed server-config: {exc}") from exc
    if mtype == MSG_ACTION:
        if len(payload) != _ACTION.size:
            raise ProtocolError(
                f"action payload must be {_ACTION.size} bytes, got {len(payload)}"
            )
        x, y, discrete = _ACTION.unpack(payload)
        if discrete > 2:
            raise ProtocolError(f"discrete action out of range: {discrete}")
        return ActionMsg(cursor_x=x, cursor_y=y, discrete=discrete)
    if mtype == MSG_FRAME:
        if len(payload) < _FRAME.size:
            raise ProtocolError("frame header truncated")
        tick, reward, flags, kind, length = _FRAME.unpack_from(payload)
        body = payload[_FRAME.size :]
        if len(body) != length:
            raise ProtocolError(
                f"frame payload length mismatch: header says {length}, got {len(body)}"
            )
        if kind not in (PAYLOAD_NONE, PAYLOAD_PIXEL, PAYLOAD_SYMBOLIC):
            raise ProtocolError(f"unknown frame payload kind: {kind}")
        return FrameMsg(
            tick=tick,
            reward=reward,
            terminated=bool(flags & FRAME_FLAG_TERMINATED),
            truncated=bool(flags & FRAME_FLAG_TRUNCATED),
            payload_kind=kind,
            payload=body,
        )
    if mtype == MSG_SNAPSHOT:
        return SnapshotMsg(data=_decode_json("snapshot", payload))
    if mtype == MSG_STATS:
        body = _decode_json("stats", payload)
        try:
            return StatsMsg(
                fps=float(body["fps"]),
                mass=float(body["mass"]),
                deaths=int(body["deaths"]),
                tick=int(body.get("tick", 0)),
                reward_rate=float(body.get("reward_rate", 0.0)),
                total_reward=float(body.get("total_reward", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed stats: {exc}") from exc
    if mtype == MSG_RESET:
        if payload:
            raise ProtocolError("reset carries no payload")
        return ResetMsg()
    if mtype == MSG_ERROR:
        body = _decode_json("error", payload)
        return ErrorMsg(code=str(body.get("code", "error")), text=str(body.get("text", "")))
    raise ProtocolError(f"unknown message type byte: 0x{mtype:02x}")
