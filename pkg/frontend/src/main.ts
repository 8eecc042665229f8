/**
 * Browser entry point: wire the canvas, the input listeners, and the
 * session together, and run the render loop on requestAnimationFrame.
 */

import { ClientSession } from "./session.js";
import {
  buildScene,
  drawScene,
  hudLines,
  isStale,
  COLORS,
  type HudState,
} from "./render.js";
import type { SnapshotData } from "./protocol.js";

const CANVAS_SIZE = 640;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
}

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const explicit = params.get("server");
  if (explicit) return explicit;
  const host = window.location.hostname || "127.0.0.1";
  const port = params.get("port") ?? "8765";
  return `ws://${host}:${port}`;
}

function main(): void {
  const canvas = byId<HTMLCanvasElement>("arena");
  canvas.width = CANVAS_SIZE;
  canvas.height = CANVAS_SIZE;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2D canvas is not available");
  const hud = byId<HTMLPreElement>("hud");
  const banner = byId<HTMLDivElement>("banner");

  const params = new URLSearchParams(window.location.search);
  const role = params.get("role") === "spectator" ? "spectator" : "human";

  let connectionDetail = "connecting…";
  const session = new ClientSession(serverUrl(), {
    role,
    onStateChange: (state, detail) => {
      connectionDetail = detail ? `${state}: ${detail}` : state;
      banner.textContent = state === "failed" ? `✖ ${connectionDetail}` : "";
      banner.style.display = state === "failed" ? "block" : "none";
    },
    onServerError: (code, text) => {
      console.error(`server error ${code}: ${text}`);
    },
  });
  session.connect();

  canvas.addEventListener("mousemove", (ev) => {
    const rect = canvas.getBoundingClientRect();
    session.input.onMouseMove(
      ev.clientX - rect.left,
      ev.clientY - rect.top,
      rect.width,
      rect.height,
    );
  });
  window.addEventListener("keydown", (ev) => {
    session.input.onKeyDown(ev.key);
    if (ev.key === " ") ev.preventDefault(); // keep the page from scrolling
  });
  window.addEventListener("keyup", (ev) => session.input.onKeyUp(ev.key));

  let lastScene: SnapshotData | undefined;
  let framesDrawn = 0;
  let renderFps = 0;
  let fpsWindowStart = performance.now();

  const renderLoop = () => {
    const fresh = session.snapshots.take();
    if (fresh) lastScene = fresh;
    if (lastScene) {
      drawScene(ctx, buildScene(lastScene, CANVAS_SIZE), CANVAS_SIZE);
    } else {
      ctx.fillStyle = COLORS.background;
      ctx.fillRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
    }

    framesDrawn += 1;
    const now = performance.now();
    if (now - fpsWindowStart >= 1000) {
      renderFps = (framesDrawn * 1000) / (now - fpsWindowStart);
      framesDrawn = 0;
      fpsWindowStart = now;
    }

    const hudState: HudState = {
      mass: session.stats?.mass ?? lastScene?.player.score ?? 0,
      totalReward: session.stats?.totalReward ?? 0,
      rewardRate: session.stats?.rewardRate ?? 0,
      deaths: session.stats?.deaths ?? 0,
      serverFps: session.stats?.fps ?? 0,
      renderFps,
      connection: connectionDetail,
    };
    hud.textContent = hudLines(hudState).join("\n");

    if (
      session.state === "open" &&
      session.lastSnapshotAt > 0 &&
      isStale(session.lastSnapshotAt, Date.now())
    ) {
      ctx.fillStyle = "rgba(0, 0, 0, 0.5)";
      ctx.fillRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
      ctx.fillStyle = "#ffffff";
      ctx.font = "24px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillText("lagging…", CANVAS_SIZE / 2, CANVAS_SIZE / 2);
    }

    requestAnimationFrame(renderLoop);
  };
  requestAnimationFrame(renderLoop);
}

main();
