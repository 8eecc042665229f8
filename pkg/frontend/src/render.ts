/**
 * Snapshot rendering, split into a pure scene builder (testable without a
 * DOM) and a thin canvas executor.
 *
 * The scene is drawn in world coordinates mapped affinely onto the square
 * canvas: scale = canvasSize / viewport.side.  Draw order is background
 * gridlines, pellets, ejected blobs, viruses, then cells sorted by mass so
 * bigger circles paint over smaller ones — the same occlusion convention
 * the simulator's own pixel planes use.
 */

import type { SnapshotData, SnapshotEntity } from "./protocol.js";

export const GRID_PITCH = 10; // world units between gridlines

export const COLORS = {
  background: "#101418",
  grid: "#2a3138",
  arenaEdge: "#4a5560",
  pellet: "#d8c84a",
  virus: "#3fae4a",
  virusEdge: "#2c7a34",
  enemy: "#d94f4f",
  enemyEdge: "#a53a3a",
  self: "#4f8fd9",
  selfEdge: "#3a6aa5",
  enemyBlob: "#e08a8a",
  selfBlob: "#8ab4e0",
} as const;

export interface CircleCommand {
  shape: "circle";
  x: number;
  y: number;
  r: number;
  fill: string;
  stroke?: string;
  lineWidth?: number;
}

export interface LineCommand {
  shape: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  stroke: string;
  lineWidth: number;
}

export type DrawCommand = CircleCommand | LineCommand;

export interface WorldToCanvas {
  (wx: number, wy: number): [number, number];
  scale: number;
}

/** Affine world→canvas map for a snapshot viewport on a square canvas. */
export function makeTransform(
  viewport: [number, number, number],
  canvasSize: number,
): WorldToCanvas {
  const [x0, y0, side] = viewport;
  const scale = canvasSize / side;
  const fn = ((wx: number, wy: number): [number, number] => [
    (wx - x0) * scale,
    (wy - y0) * scale,
  ]) as WorldToCanvas;
  fn.scale = scale;
  return fn;
}

function gridCommands(
  snapshot: SnapshotData,
  tf: WorldToCanvas,
  canvasSize: number,
): LineCommand[] {
  const [x0, y0, side] = snapshot.player.viewport;
  const [arenaW, arenaH] = snapshot.global.arena;
  const cmds: LineCommand[] = [];
  // Visible portion of the arena, in canvas coordinates.
  const [ax0, ay0] = tf(Math.max(0, x0), Math.max(0, y0));
  const [ax1, ay1] = tf(Math.min(arenaW, x0 + side), Math.min(arenaH, y0 + side));
  if (ax1 <= ax0 || ay1 <= ay0) return cmds;
  for (
    let k = Math.ceil(Math.max(0, x0) / GRID_PITCH);
    k * GRID_PITCH <= Math.min(arenaW, x0 + side);
    k++
  ) {
    const [cx] = tf(k * GRID_PITCH, 0);
    cmds.push({
      shape: "line",
      x1: cx,
      y1: ay0,
      x2: cx,
      y2: ay1,
      stroke: COLORS.grid,
      lineWidth: 1,
    });
  }
  for (
    let k = Math.ceil(Math.max(0, y0) / GRID_PITCH);
    k * GRID_PITCH <= Math.min(arenaH, y0 + side);
    k++
  ) {
    const [, cy] = tf(0, k * GRID_PITCH);
    cmds.push({
      shape: "line",
      x1: ax0,
      y1: cy,
      x2: ax1,
      y2: cy,
      stroke: COLORS.grid,
      lineWidth: 1,
    });
  }
  // Arena boundary, so the dish edge reads clearly when in view.
  const edges: Array<[number, number, number, number]> = [
    [ax0, ay0, ax1, ay0],
    [ax0, ay1, ax1, ay1],
    [ax0, ay0, ax0, ay1],
    [ax1, ay0, ax1, ay1],
  ];
  for (const [ex0, ey0, ex1, ey1] of edges) {
    const onCanvas = (v: number) => v > -1 && v < canvasSize + 1;
    if ((onCanvas(ex0) || onCanvas(ex1)) && (onCanvas(ey0) || onCanvas(ey1))) {
      cmds.push({
        shape: "line",
        x1: ex0,
        y1: ey0,
        x2: ex1,
        y2: ey1,
        stroke: COLORS.arenaEdge,
        lineWidth: 2,
      });
    }
  }
  return cmds;
}

function circleFor(e: SnapshotEntity, tf: WorldToCanvas): CircleCommand {
  const [cx, cy] = tf(e.pos[0], e.pos[1]);
  const r = Math.max(1, e.radius * tf.scale);
  switch (e.kind) {
    case "pellet":
      return { shape: "circle", x: cx, y: cy, r, fill: COLORS.pellet };
    case "virus":
      return {
        shape: "circle",
        x: cx,
        y: cy,
        r,
        fill: COLORS.virus,
        stroke: COLORS.virusEdge,
        lineWidth: 3,
      };
    case "blob":
      return {
        shape: "circle",
        x: cx,
        y: cy,
        r,
        fill: e.self ? COLORS.selfBlob : COLORS.enemyBlob,
      };
    case "cell":
      return {
        shape: "circle",
        x: cx,
        y: cy,
        r,
        fill: e.self ? COLORS.self : COLORS.enemy,
        stroke: e.self ? COLORS.selfEdge : COLORS.enemyEdge,
        lineWidth: 2,
      };
  }
}

/** Build the full draw-command list for one snapshot. */
export function buildScene(
  snapshot: SnapshotData,
  canvasSize: number,
): DrawCommand[] {
  const tf = makeTransform(snapshot.player.viewport, canvasSize);
  const cmds: DrawCommand[] = gridCommands(snapshot, tf, canvasSize);
  const byKind = (kind: SnapshotEntity["kind"]) =>
    snapshot.overlap.filter((e) => e.kind === kind);
  for (const pellet of byKind("pellet")) cmds.push(circleFor(pellet, tf));
  for (const blob of byKind("blob")) cmds.push(circleFor(blob, tf));
  for (const virus of byKind("virus")) cmds.push(circleFor(virus, tf));
  const cells = byKind("cell").sort((a, b) => a.mass - b.mass);
  for (const cell of cells) cmds.push(circleFor(cell, tf));
  return cmds;
}

export interface HudState {
  mass: number;
  totalReward: number;
  rewardRate: number;
  deaths: number;
  serverFps: number;
  renderFps: number;
  connection: string;
}

export function hudLines(hud: HudState): string[] {
  return [
    `mass ${hud.mass.toFixed(1)}`,
    `reward ${hud.totalReward.toFixed(1)} (${hud.rewardRate >= 0 ? "+" : ""}${hud.rewardRate.toFixed(2)}/s)`,
    `deaths ${hud.deaths}`,
    `server ${hud.serverFps.toFixed(0)} tps · render ${hud.renderFps.toFixed(0)} fps`,
    hud.connection,
  ];
}

/** Snapshot older than this is shown with the "lagging" overlay. */
export const STALE_MS = 500;

export function isStale(lastSnapshotAt: number, now: number): boolean {
  return now - lastSnapshotAt > STALE_MS;
}

/** Execute commands on a 2D canvas context (not exercised in unit tests). */
export function drawScene(
  ctx: CanvasRenderingContext2D,
  cmds: DrawCommand[],
  canvasSize: number,
): void {
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, canvasSize, canvasSize);
  for (const cmd of cmds) {
    if (cmd.shape === "line") {
      ctx.strokeStyle = cmd.stroke;
      ctx.lineWidth = cmd.lineWidth;
      ctx.beginPath();
      ctx.moveTo(cmd.x1, cmd.y1);
      ctx.lineTo(cmd.x2, cmd.y2);
      ctx.stroke();
    } else {
      ctx.fillStyle = cmd.fill;
      ctx.beginPath();
      ctx.arc(cmd.x, cmd.y, cmd.r, 0, Math.PI * 2);
      ctx.fill();
      if (cmd.stroke) {
        ctx.strokeStyle = cmd.stroke;
        ctx.lineWidth = cmd.lineWidth ?? 1;
        ctx.stroke();
      }
    }
  }
}
