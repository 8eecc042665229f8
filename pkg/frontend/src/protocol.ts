/**
 * Wire protocol codec — the TypeScript twin of the server's codec.
 *
 * Every websocket frame is binary: one type byte, then the payload.
 * Packed structs (actions, frame headers) are little-endian; everything
 * else is UTF-8 JSON. See the protocol document shipped with the server
 * package for the byte-level layout; the fixtures in the test suite are
 * generated by the server-side codec, so the two implementations cannot
 * drift silently.
 */

export const PROTOCOL_VERSION = 1;

export const MSG_HELLO = 0x01;
export const MSG_SERVER_CONFIG = 0x02;
export const MSG_ACTION = 0x03;
export const MSG_FRAME = 0x04;
export const MSG_SNAPSHOT = 0x05;
export const MSG_STATS = 0x06;
export const MSG_RESET = 0x07;
export const MSG_ERROR = 0x08;

export const PAYLOAD_NONE = 0;
export const PAYLOAD_PIXEL = 1;
export const PAYLOAD_SYMBOLIC = 2;

/** 0 = none, 1 = split, 2 = eject. */
export type DiscreteAction = 0 | 1 | 2;

export type Role = "agent" | "human" | "spectator";

export interface ServerConfigMsg {
  type: "config";
  version: number;
  scenario: string;
  scenarioIni: string;
  seed: number;
  frameSkip: number;
  obsMode: string;
  noiseStd: number;
  resolution: number;
  tickRate: number;
  mode: string;
  snapshotCadence: number;
  arena: [number, number];
}

export interface FrameMsg {
  type: "frame";
  tick: number;
  reward: number;
  terminated: boolean;
  truncated: boolean;
  payloadKind: number;
  payload: Uint8Array;
}

/** One entity inside the viewport, in world coordinates. */
export interface SnapshotEntity {
  kind: "pellet" | "virus" | "cell" | "blob";
  serial: number;
  pos: [number, number];
  radius: number;
  mass: number;
  vel: [number, number];
  self: boolean;
}

export interface SnapshotData {
  global: { arena: [number, number]; tick: number };
  player: {
    /** [x0, y0, side]: top-left corner and side of the square viewport. */
    viewport: [number, number, number];
    score: number;
    can_split: boolean;
    can_eject: boolean;
  };
  overlap: SnapshotEntity[];
}

export interface SnapshotMsg {
  type: "snapshot";
  data: SnapshotData;
}

export interface StatsMsg {
  type: "stats";
  fps: number;
  mass: number;
  deaths: number;
  tick: number;
  rewardRate: number;
  totalReward: number;
}

export interface ResetMsg {
  type: "reset";
}

export interface ErrorMsg {
  type: "error";
  code: string;
  text: string;
}

export type ServerMessage =
  | ServerConfigMsg
  | FrameMsg
  | SnapshotMsg
  | StatsMsg
  | ResetMsg
  | ErrorMsg;

export class ProtocolError extends Error {}

const FRAME_HEADER_BYTES = 8 + 8 + 1 + 1 + 4;
const FRAME_FLAG_TERMINATED = 0x01;
const FRAME_FLAG_TRUNCATED = 0x02;

const textEncoder = new TextEncoder();
const textDecoder = new TextDecoder("utf-8", { fatal: true });

function jsonMessage(type: number, body: unknown): Uint8Array {
  const json = textEncoder.encode(JSON.stringify(body));
  const out = new Uint8Array(1 + json.length);
  out[0] = type;
  out.set(json, 1);
  return out;
}

export interface HelloOptions {
  scenario?: string;
  seed?: number;
  name?: string;
}

export function encodeHello(role: Role, opts: HelloOptions = {}): Uint8Array {
  const body: Record<string, unknown> = { version: PROTOCOL_VERSION, role };
  if (opts.scenario !== undefined) body.scenario = opts.scenario;
  if (opts.seed !== undefined) body.seed = opts.seed;
  if (opts.name) body.name = opts.name;
  return jsonMessage(MSG_HELLO, body);
}

/** Pack a cursor + discrete action: `<ffB` after the type byte. */
export function encodeAction(
  cursorX: number,
  cursorY: number,
  discrete: DiscreteAction,
): Uint8Array {
  const out = new Uint8Array(1 + 4 + 4 + 1);
  const view = new DataView(out.buffer);
  out[0] = MSG_ACTION;
  view.setFloat32(1, cursorX, true);
  view.setFloat32(5, cursorY, true);
  out[9] = discrete;
  return out;
}

export function encodeReset(): Uint8Array {
  return Uint8Array.of(MSG_RESET);
}

function parseJson(kind: string, payload: Uint8Array): Record<string, unknown> {
  let obj: unknown;
  try {
    obj = JSON.parse(textDecoder.decode(payload));
  } catch (err) {
    throw new ProtocolError(`malformed ${kind} payload: ${err}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError(`malformed ${kind} payload: expected a JSON object`);
  }
  return obj as Record<string, unknown>;
}

export function decodeMessage(data: ArrayBuffer | Uint8Array): ServerMessage {
  const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
  if (bytes.length < 1) throw new ProtocolError("empty wire message");
  const mtype = bytes[0]!;
  const payload = bytes.subarray(1);

  switch (mtype) {
    case MSG_SERVER_CONFIG: {
      const body = parseJson("server-config", payload);
      const arena = body.arena as [number, number];
      if (!Array.isArray(arena) || arena.length !== 2) {
        throw new ProtocolError("malformed server-config: bad arena");
      }
      return {
        type: "config",
        version: body.version as number,
        scenario: body.scenario as string,
        scenarioIni: body.scenario_ini as string,
        seed: body.seed as number,
        frameSkip: body.frame_skip as number,
        obsMode: body.obs_mode as string,
        noiseStd: body.noise_std as number,
        resolution: body.resolution as number,
        tickRate: body.tick_rate as number,
        mode: body.mode as string,
        snapshotCadence: body.snapshot_cadence as number,
        arena: [arena[0], arena[1]],
      };
    }
    case MSG_FRAME: {
      if (payload.length < FRAME_HEADER_BYTES) {
        throw new ProtocolError("frame header truncated");
      }
      const view = new DataView(
        payload.buffer,
        payload.byteOffset,
        payload.byteLength,
      );
      const tick = Number(view.getBigUint64(0, true));
      const reward = view.getFloat64(8, true);
      const flags = view.getUint8(16);
      const kind = view.getUint8(17);
      const length = view.getUint32(18, true);
      const body = payload.subarray(FRAME_HEADER_BYTES);
      if (body.length !== length) {
        throw new ProtocolError(
          `frame payload length mismatch: header says ${length}, got ${body.length}`,
        );
      }
      return {
        type: "frame",
        tick,
        reward,
        terminated: (flags & FRAME_FLAG_TERMINATED) !== 0,
        truncated: (flags & FRAME_FLAG_TRUNCATED) !== 0,
        payloadKind: kind,
        payload: body,
      };
    }
    case MSG_SNAPSHOT: {
      const body = parseJson("snapshot", payload);
      if (!("global" in body) || !("player" in body) || !("overlap" in body)) {
        throw new ProtocolError("malformed snapshot: missing sections");
      }
      return { type: "snapshot", data: body as unknown as SnapshotData };
    }
    case MSG_STATS: {
      const body = parseJson("stats", payload);
      return {
        type: "stats",
        fps: body.fps as number,
        mass: body.mass as number,
        deaths: body.deaths as number,
        tick: (body.tick as number) ?? 0,
        rewardRate: (body.reward_rate as number) ?? 0,
        totalReward: (body.total_reward as number) ?? 0,
      };
    }
    case MSG_RESET:
      if (payload.length > 0) throw new ProtocolError("reset carries no payload");
      return { type: "reset" };
    case MSG_ERROR: {
      const body = parseJson("error", payload);
      return {
        type: "error",
        code: String(body.code ?? "error"),
        text: String(body.text ?? ""),
      };
    }
    default:
      throw new ProtocolError(
        `unknown message type byte: 0x${mtype.toString(16).padStart(2, "0")}`,
      );
  }
}
