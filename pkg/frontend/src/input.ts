/**
 * Input state: mouse position mapped into the cursor square, and
 * edge-triggered split/eject keys.
 *
 * Axis convention: cursorX = 2*px/width - 1 and cursorY = 2*py/height - 1,
 * clamped to [-1, 1].  Both canvas y and world y grow downward, so no flip
 * is applied: the top edge of the canvas is cursor y = -1, the bottom edge
 * is +1, and the top-right corner maps to exactly (1, -1).  The server
 * resolves the world target as viewportCenter + cursor * side/2.
 */

import type { DiscreteAction } from "./protocol.js";

export interface Cursor {
  x: number;
  y: number;
}

function clamp(v: number): number {
  return Math.min(1, Math.max(-1, v));
}

/**
 * Affine map from canvas pixel coordinates to the [-1, 1]² cursor square.
 * Canvas center maps to (0, 0); corners map to cursor components of
 * magnitude exactly 1 (top-left (-1,-1), bottom-right (1,1)).
 */
export function mouseToCursor(
  px: number,
  py: number,
  width: number,
  height: number,
): Cursor {
  return {
    x: clamp((2 * px) / width - 1),
    y: clamp((2 * py) / height - 1),
  };
}

export const KEY_SPLIT = " "; // space bar
export const KEY_EJECT = "w";

/**
 * Tracks the live cursor (level-held) and at most one pending discrete
 * action (edge-triggered: holding a key does not repeat it; a second press
 * before the pending one is consumed overwrites it).
 */
export class InputTracker {
  cursor: Cursor = { x: 0, y: 0 };
  private pending: DiscreteAction = 0;
  private held = new Set<string>();

  onMouseMove(px: number, py: number, width: number, height: number): void {
    this.cursor = mouseToCursor(px, py, width, height);
  }

  onKeyDown(key: string): void {
    const normalized = key.length === 1 ? key.toLowerCase() : key;
    if (this.held.has(normalized)) return; // auto-repeat: not an edge
    this.held.add(normalized);
    if (normalized === KEY_SPLIT) this.pending = 1;
    else if (normalized === KEY_EJECT) this.pending = 2;
  }

  onKeyUp(key: string): void {
    this.held.delete(key.length === 1 ? key.toLowerCase() : key);
  }

  /** The pending discrete action without consuming it. */
  peekPending(): DiscreteAction {
    return this.pending;
  }

  /**
   * Snapshot the action to send: current cursor plus the pending discrete,
   * which is consumed (subsequent consumes return 0 until the next press).
   */
  consume(): { x: number; y: number; discrete: DiscreteAction } {
    const discrete = this.pending;
    this.pending = 0;
    return { x: this.cursor.x, y: this.cursor.y, discrete };
  }
}
