import { describe, expect, it } from "vitest";

import { LatestWins } from "../src/buffer.js";

describe("one-slot latest-wins buffer", () => {
  it("starts empty", () => {
    const buf = new LatestWins<number>();
    expect(buf.isEmpty).toBe(true);
    expect(buf.take()).toBeUndefined();
  });

  it("newer values overwrite older ones", () => {
    const buf = new LatestWins<number>();
    buf.put(1);
    buf.put(2);
    buf.put(3);
    expect(buf.take()).toBe(3);
    expect(buf.take()).toBeUndefined();
  });

  it("peek does not consume", () => {
    const buf = new LatestWins<string>();
    buf.put("snap");
    expect(buf.peek()).toBe("snap");
    expect(buf.isEmpty).toBe(false);
    expect(buf.take()).toBe("snap");
    expect(buf.isEmpty).toBe(true);
  });

  it("take clears the slot so a slow consumer never re-renders stale data", () => {
    const buf = new LatestWins<number>();
    buf.put(7);
    buf.take();
    buf.put(8);
    expect(buf.take()).toBe(8);
  });
});
