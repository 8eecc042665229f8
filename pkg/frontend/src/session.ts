/**
 * Client session: owns the websocket, the handshake, the latest-wins
 * snapshot buffer, and the input pacing (one action per received
 * snapshot, matching the server's snapshot cadence).
 *
 * The WebSocket constructor is injectable so the state machine is fully
 * testable without a network stack.
 */

import { LatestWins } from "./buffer.js";
import { InputTracker } from "./input.js";
import {
  decodeMessage,
  encodeAction,
  encodeHello,
  PROTOCOL_VERSION,
  ProtocolError,
  type Role,
  type ServerConfigMsg,
  type SnapshotData,
  type StatsMsg,
} from "./protocol.js";

export type SessionState =
  | "connecting"
  | "open"
  | "reconnecting"
  | "failed"
  | "closed";

/** The subset of the WebSocket API the session depends on. */
export interface WebSocketLike {
  binaryType: string;
  send(data: Uint8Array): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface SessionOptions {
  role?: Role;
  name?: string;
  /** Reconnect attempts before giving up (0 disables reconnecting). */
  maxReconnects?: number;
  /** Base reconnect delay in ms; doubles per consecutive attempt. */
  reconnectDelayMs?: number;
  webSocketFactory?: WebSocketFactory;
  onStateChange?: (state: SessionState, detail?: string) => void;
  onServerError?: (code: string, text: string) => void;
}

export class ClientSession {
  readonly url: string;
  readonly role: Role;
  readonly input = new InputTracker();
  readonly snapshots = new LatestWins<SnapshotData>();

  state: SessionState = "closed";
  config: ServerConfigMsg | null = null;
  stats: StatsMsg | null = null;
  lastSnapshotAt = 0;
  snapshotsReceived = 0;

  private ws: WebSocketLike | null = null;
  private readonly opts: Required<
    Pick<SessionOptions, "maxReconnects" | "reconnectDelayMs">
  > &
    SessionOptions;
  private reconnectsLeft: number;
  private closedByUser = false;

  constructor(url: string, opts: SessionOptions = {}) {
    this.url = url;
    this.role = opts.role ?? "human";
    this.opts = { maxReconnects: 3, reconnectDelayMs: 250, ...opts };
    this.reconnectsLeft = this.opts.maxReconnects;
  }

  connect(): void {
    this.closedByUser = false;
    this.open("connecting");
  }

  close(): void {
    this.closedByUser = true;
    this.setState("closed");
    this.ws?.close();
    this.ws = null;
  }

  private setState(state: SessionState, detail?: string): void {
    this.state = state;
    this.opts.onStateChange?.(state, detail);
  }

  private open(entering: SessionState): void {
    this.setState(entering);
    const factory: WebSocketFactory =
      this.opts.webSocketFactory ??
      ((url) => new WebSocket(url) as unknown as WebSocketLike);
    const ws = factory(this.url);
    this.ws = ws;
    ws.binaryType = "arraybuffer";
    ws.onopen = () => {
      ws.send(encodeHello(this.role, { name: this.opts.name }));
    };
    ws.onmessage = (event) => this.handleMessage(event.data);
    ws.onerror = () => {
      /* the close handler decides what happens next */
    };
    ws.onclose = () => {
      if (this.closedByUser || this.state === "failed") return;
      if (this.reconnectsLeft > 0) {
        const attempt = this.opts.maxReconnects - this.reconnectsLeft;
        this.reconnectsLeft -= 1;
        const delay = this.opts.reconnectDelayMs * 2 ** attempt;
        setTimeout(() => {
          if (!this.closedByUser) this.open("reconnecting");
        }, delay);
      } else {
        this.setState("failed", "connection lost");
      }
    };
  }

  private handleMessage(data: unknown): void {
    if (typeof data === "string") return; // protocol is binary-only
    let msg;
    try {
      msg = decodeMessage(data as ArrayBuffer);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.fail(`protocol error: ${err.message}`);
        return;
      }
      throw err;
    }
    switch (msg.type) {
      case "config":
        if (msg.version !== PROTOCOL_VERSION) {
          this.fail(
            `protocol version mismatch: server ${msg.version}, client ${PROTOCOL_VERSION}`,
          );
          return;
        }
        this.config = msg;
        this.reconnectsLeft = this.opts.maxReconnects; // resume succeeded
        this.setState("open");
        break;
      case "snapshot":
        this.snapshots.put(msg.data);
        this.snapshotsReceived += 1;
        this.lastSnapshotAt = Date.now();
        this.sendAction();
        break;
      case "stats":
        this.stats = msg;
        break;
      case "error":
        this.opts.onServerError?.(msg.code, msg.text);
        if (msg.code === "version-mismatch" || msg.code === "seat-taken") {
          this.fail(`${msg.code}: ${msg.text}`);
        }
        break;
      default:
        break; // frames/resets are not part of the human session flow
    }
  }

  /** Sample the input tracker and send one action (spectators stay mute). */
  private sendAction(): void {
    if (this.role !== "human" || this.state !== "open" || !this.ws) return;
    const { x, y, discrete } = this.input.consume();
    this.ws.send(encodeAction(x, y, discrete));
  }

  private fail(detail: string): void {
    this.setState("failed", detail);
    this.ws?.close();
    this.ws = null;
  }
}
