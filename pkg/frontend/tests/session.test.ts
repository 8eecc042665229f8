import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ClientSession, type WebSocketLike } from "../src/session.js";
import {
  decodeMessage,
  encodeMessageForTest,
  type SnapshotData,
} from "./wire-helpers.js";

class FakeWebSocket implements WebSocketLike {
  static instances: FakeWebSocket[] = [];

  binaryType = "blob";
  sent: Uint8Array[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  constructor(public url: string) {
    FakeWebSocket.instances.push(this);
  }

  send(data: Uint8Array): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  serverOpens(): void {
    this.onopen?.();
  }

  serverSends(bytes: Uint8Array): void {
    // Deliver as ArrayBuffer, the way a binaryType=arraybuffer socket does.
    this.onmessage?.({
      data: bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength),
    });
  }

  serverCloses(): void {
    this.onclose?.();
  }
}

function makeSession(
  overrides: ConstructorParameters<typeof ClientSession>[1] = {},
) {
  const states: string[] = [];
  const errors: Array<[string, string]> = [];
  const session = new ClientSession("ws://test", {
    webSocketFactory: (url) => new FakeWebSocket(url),
    onStateChange: (s) => states.push(s),
    onServerError: (code, text) => errors.push([code, text]),
    ...overrides,
  });
  return { session, states, errors };
}

const latest = () => FakeWebSocket.instances.at(-1)!;

beforeEach(() => {
  FakeWebSocket.instances = [];
});

afterEach(() => {
  vi.useRealTimers();
});

describe("handshake", () => {
  it("sends a version-tagged human hello on open", () => {
    const { session } = makeSession();
    session.connect();
    const ws = latest();
    expect(ws.binaryType).toBe("arraybuffer");
    ws.serverOpens();
    expect(ws.sent).toHaveLength(1);
    const hello = JSON.parse(new TextDecoder().decode(ws.sent[0]!.subarray(1)));
    expect(ws.sent[0]![0]).toBe(0x01);
    expect(hello).toEqual({ version: 1, role: "human" });
  });

  it("reaches open after the server config", () => {
    const { session, states } = makeSession();
    session.connect();
    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 1 }));
    expect(session.state).toBe("open");
    expect(session.config?.scenario).toBe("mini-1");
    expect(states).toEqual(["connecting", "open"]);
  });

  it("fails cleanly on a protocol version mismatch", () => {
    const { session } = makeSession();
    session.connect();
    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 2 }));
    expect(session.state).toBe("failed");
    expect(latest().closed).toBe(true);
  });
});

describe("snapshot-paced input", () => {
  function openSession() {
    const made = makeSession();
    made.session.connect();
    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 1 }));
    return made;
  }

  it("answers every snapshot with exactly one action", () => {
    const { session } = openSession();
    const ws = latest();
    for (let i = 0; i < 5; i++) {
      ws.serverSends(encodeMessageForTest.snapshot());
    }
    const actions = ws.sent.filter((m) => m[0] === 0x03);
    expect(actions).toHaveLength(5);
    expect(session.snapshotsReceived).toBe(5);
  });

  it("a key press held across many snapshots sends exactly one split", () => {
    const { session } = openSession();
    const ws = latest();
    session.input.onKeyDown(" ");
    for (let i = 0; i < 10; i++) {
      session.input.onKeyDown(" "); // browser auto-repeat
      ws.serverSends(encodeMessageForTest.snapshot());
    }
    const discretes = ws.sent
      .filter((m) => m[0] === 0x03)
      .map((m) => m[9]);
    expect(discretes.filter((d) => d === 1)).toHaveLength(1);
  });

  it("keeps the newest snapshot in the one-slot buffer", () => {
    const { session } = openSession();
    const ws = latest();
    ws.serverSends(encodeMessageForTest.snapshot({ tick: 2 }));
    ws.serverSends(encodeMessageForTest.snapshot({ tick: 4 }));
    const snap = session.snapshots.take() as SnapshotData;
    expect(snap.global.tick).toBe(4);
    expect(session.snapshots.take()).toBeUndefined();
  });

  it("spectators never send actions", () => {
    const { session } = makeSession({ role: "spectator" });
    session.connect();
    const ws = latest();
    ws.serverOpens();
    ws.serverSends(encodeMessageForTest.config({ version: 1 }));
    ws.serverSends(encodeMessageForTest.snapshot());
    ws.serverSends(encodeMessageForTest.snapshot());
    expect(ws.sent.filter((m) => m[0] === 0x03)).toHaveLength(0);
    expect(session.snapshotsReceived).toBe(2);
  });
});

describe("stats and server errors", () => {
  it("tracks the latest stats for the HUD", () => {
    const { session } = makeSession();
    session.connect();
    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 1 }));
    latest().serverSends(
      encodeMessageForTest.stats({ mass: 99, total_reward: 74, deaths: 2 }),
    );
    expect(session.stats?.mass).toBe(99);
    expect(session.stats?.totalReward).toBe(74);
    expect(session.stats?.deaths).toBe(2);
  });

  it("surfaces server errors and fails on fatal ones", () => {
    const { session, errors } = makeSession();
    session.connect();
    latest().serverOpens();
    latest().serverSends(
      encodeMessageForTest.error("seat-taken", "someone is playing"),
    );
    expect(errors).toEqual([["seat-taken", "someone is playing"]]);
    expect(session.state).toBe("failed");
  });

  it("non-fatal server errors keep the session open", () => {
    const { session, errors } = makeSession();
    session.connect();
    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 1 }));
    latest().serverSends(
      encodeMessageForTest.error("reset-refused", "recording"),
    );
    expect(errors).toHaveLength(1);
    expect(session.state).toBe("open");
  });
});

describe("reconnection", () => {
  it("retries with backoff and resumes on success", () => {
    vi.useFakeTimers();
    const { session, states } = makeSession({
      maxReconnects: 2,
      reconnectDelayMs: 100,
    });
    session.connect();
    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 1 }));
    expect(FakeWebSocket.instances).toHaveLength(1);

    latest().serverCloses();
    vi.advanceTimersByTime(100);
    expect(FakeWebSocket.instances).toHaveLength(2);
    expect(states).toContain("reconnecting");

    latest().serverOpens();
    latest().serverSends(encodeMessageForTest.config({ version: 1 }));
    expect(session.state).toBe("open");
  });

  it("gives up after the attempt budget and reports failure", () => {
    vi.useFakeTimers();
    const { session } = makeSession({ maxReconnects: 1, reconnectDelayMs: 50 });
    session.connect();
    latest().serverOpens();
    latest().serverCloses();
    vi.advanceTimersByTime(50);
    expect(FakeWebSocket.instances).toHaveLength(2);
    latest().serverCloses(); // second failure exhausts the budget
    vi.advanceTimersByTime(10_000);
    expect(FakeWebSocket.instances).toHaveLength(2);
    expect(session.state).toBe("failed");
  });

  it("does not reconnect after a user close", () => {
    vi.useFakeTimers();
    const { session } = makeSession();
    session.connect();
    latest().serverOpens();
    session.close();
    latest().serverCloses();
    vi.advanceTimersByTime(60_000);
    expect(FakeWebSocket.instances).toHaveLength(1);
    expect(session.state).toBe("closed");
  });
});
