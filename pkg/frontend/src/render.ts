/**
 * Drawing for the arena view.
 *
 * Rendering goes through a small DrawTarget interface rather than the
 * canvas API directly, so the same code runs under tests against a
 * recording target. Coordinates are arena meters mapped into the
 * viewport with one uniform scale (no stretching) and a flipped y
 * axis, so larger y draws higher on screen.
 */

import { Activity, Arena, Session } from "./schema.js";

export interface Viewport {
  width: number;
  height: number;
}

export interface DrawTarget {
  clear(): void;
  /** Arena outline. */
  drawRect(x: number, y: number, w: number, h: number, color: string): void;
  /** One animal. */
  drawCircle(x: number, y: number, radius: number, color: string): void;
  /** Flock centroid cross. */
  drawMarker(x: number, y: number, size: number, color: string): void;
  /** Speed and time readout. */
  drawText(text: string, x: number, y: number, color: string): void;
}

export interface Projection {
  scale: number;
  toScreen(x: number, y: number): [number, number];
}

export const ANIMAL_COLOR = "#4dabf7";
export const CENTROID_COLOR = "#ff6b6b";
export const ARENA_COLOR = "#495057";
export const TEXT_COLOR = "#dee2e6";
export const DOT_RADIUS = 4;
export const MARKER_SIZE = 10;

export const ACTIVITY_COLORS: Record<Activity, string> = {
  not_active: "#748ffc",
  active: "#51cf66",
  herd: "#fcc419",
};

export function makeProjection(arena: Arena, view: Viewport): Projection {
  const scale = Math.min(view.width / arena.width, view.height / arena.height);
  const offsetX = (view.width - arena.width * scale) / 2;
  const offsetY = (view.height - arena.height * scale) / 2;
  return {
    scale,
    toScreen: (x: number, y: number) =>
      [offsetX + x * scale, view.height - offsetY - y * scale],
  };
}

/**
 * Mean animal speed at frame f in arena units per second, computed
 * from the displacement since the previous frame. The first frame
 * borrows the first movement, the same convention the toolkit's
 * feature pipeline uses, so the readout never shows a fake zero.
 */
export function frameSpeed(session: Session, f: number): number {
  const { frames, timestamps } = session;
  if (timestamps.length < 2) {
    return 0;
  }
  const g = f === 0 ? 1 : f;
  const dt = timestamps[g] - timestamps[g - 1];
  let total = 0;
  const nAnimals = frames[g].length;
  for (let a = 0; a < nAnimals; a++) {
    const dx = frames[g][a][0] - frames[g - 1][a][0];
    const dy = frames[g][a][1] - frames[g - 1][a][1];
    total += Math.hypot(dx, dy);
  }
  return total / nAnimals / dt;
}

export interface RenderedFrame {
  /** Screen coordinates per animal, in animal_ids order. */
  positions: Array<[number, number]>;
  /** Screen coordinates of the centroid marker. */
  centroid: [number, number];
  /** Mean speed shown in the readout, arena units per second. */
  speed: number;
  readout: string;
}

export function renderFrame(
    session: Session, f: number, target: DrawTarget,
    view: Viewport): RenderedFrame {
  if (!Number.isInteger(f) || f < 0 || f >= session.frames.length) {
    throw new RangeError(
      `frame ${f} out of range for ${session.frames.length} frames`);
  }
  const proj = makeProjection(session.arena, view);
  target.clear();

  const [left, top] = proj.toScreen(0, session.arena.height);
  target.drawRect(left, top, session.arena.width * proj.scale,
    session.arena.height * proj.scale, ARENA_COLOR);

  const positions: Array<[number, number]> = session.frames[f].map(
    (pos) => proj.toScreen(pos[0], pos[1]));
  for (const [px, py] of positions) {
    target.drawCircle(px, py, DOT_RADIUS, ANIMAL_COLOR);
  }

  // The marker sits at the mean of the positions just drawn.
  let cx = 0;
  let cy = 0;
  for (const [px, py] of positions) {
    cx += px;
    cy += py;
  }
  cx /= positions.length;
  cy /= positions.length;
  target.drawMarker(cx, cy, MARKER_SIZE, CENTROID_COLOR);

  const speed = frameSpeed(session, f);
  const readout =
    `t=${session.timestamps[f]}  mean speed ${speed.toFixed(2)} m/s`;
  target.drawText(readout, 8, 16, TEXT_COLOR);

  return { positions, centroid: [cx, cy], speed, readout };
}
