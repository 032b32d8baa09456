/**
 * Browser entry point: wires the schema, store, playback and render
 * modules to the DOM. Everything here is glue; the behavior under test
 * lives in the other modules.
 *
 * Workflow: load a session JSON exported by the toolkit, replay it,
 * drag on the timeline to annotate intervals, then download the labels
 * JSON and feed it back to the toolkit's ingest command.
 */

import { PlaybackClock } from "./playback.js";
import {
  ACTIVITY_COLORS, DrawTarget, Viewport, renderFrame,
} from "./render.js";
import {
  Activity, LabelSpan, SchemaError, labelsJson, parseSession,
} from "./schema.js";
import { AnnotationAction, SessionStore } from "./store.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const fileInput = el<HTMLInputElement>("session-file");
const arenaCanvas = el<HTMLCanvasElement>("arena");
const timelineCanvas = el<HTMLCanvasElement>("timeline");
const playButton = el<HTMLButtonElement>("play");
const speedSelect = el<HTMLSelectElement>("speed");
const activitySelect = el<HTMLSelectElement>("activity");
const undoButton = el<HTMLButtonElement>("undo");
const redoButton = el<HTMLButtonElement>("redo");
const deleteButton = el<HTMLButtonElement>("delete");
const exportButton = el<HTMLButtonElement>("export");
const banner = el<HTMLDivElement>("banner");
const status = el<HTMLSpanElement>("status");

class CanvasTarget implements DrawTarget {
  constructor(private readonly ctx: CanvasRenderingContext2D,
              private readonly view: Viewport) {}

  clear(): void {
    this.ctx.fillStyle = "#14161a";
    this.ctx.fillRect(0, 0, this.view.width, this.view.height);
  }

  drawRect(x: number, y: number, w: number, h: number, color: string): void {
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = 1;
    this.ctx.strokeRect(x, y, w, h);
  }

  drawCircle(x: number, y: number, radius: number, color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.beginPath();
    this.ctx.arc(x, y, radius, 0, 2 * Math.PI);
    this.ctx.fill();
  }

  drawMarker(x: number, y: number, size: number, color: string): void {
    const half = size / 2;
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = 2;
    this.ctx.beginPath();
    this.ctx.moveTo(x - half, y);
    this.ctx.lineTo(x + half, y);
    this.ctx.moveTo(x, y - half);
    this.ctx.lineTo(x, y + half);
    this.ctx.stroke();
  }

  drawText(text: string, x: number, y: number, color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.font = "13px monospace";
    this.ctx.fillText(text, x, y);
  }
}

let store: SessionStore | null = null;
let clock: PlaybackClock | null = null;
let selected: LabelSpan | null = null;
let bannerTimer: number | undefined;

type Drag =
  | { mode: "create"; anchor: number; cursor: number }
  | { mode: "resize"; label: LabelSpan; edge: "start" | "end"; cursor: number };
let drag: Drag | null = null;

const EDGE_GRAB_PX = 5;

function showBanner(message: string, kind: "error" | "reject"): void {
  banner.textContent = message;
  banner.className = kind;
  banner.style.display = "block";
  if (bannerTimer !== undefined) {
    window.clearTimeout(bannerTimer);
    bannerTimer = undefined;
  }
  if (kind === "reject") {
    bannerTimer = window.setTimeout(() => {
      banner.style.display = "none";
    }, 2500);
  }
}

function hideBanner(): void {
  banner.style.display = "none";
}

function timeAxis(): { first: number; span: number } {
  const times = store!.timestamps;
  const first = times[0];
  // Half-open intervals may end one past the final timestamp.
  return { first, span: times[times.length - 1] + 1 - first };
}

function xToTime(x: number): number {
  const { first, span } = timeAxis();
  const frac = Math.min(Math.max(x / timelineCanvas.width, 0), 1);
  return Math.round(first + frac * span);
}

function timeToX(t: number): number {
  const { first, span } = timeAxis();
  return ((t - first) / span) * timelineCanvas.width;
}

function drawTimeline(): void {
  const ctx = timelineCanvas.getContext("2d")!;
  const w = timelineCanvas.width;
  const h = timelineCanvas.height;
  ctx.fillStyle = "#1d2026";
  ctx.fillRect(0, 0, w, h);
  if (store === null || clock === null) {
    return;
  }
  for (const label of store.labels) {
    const x0 = timeToX(label.tStart);
    const x1 = timeToX(label.tEnd);
    ctx.fillStyle = ACTIVITY_COLORS[label.activity];
    ctx.globalAlpha =
      selected !== null && selected.tStart === label.tStart ? 1.0 : 0.65;
    ctx.fillRect(x0, 6, x1 - x0, h - 12);
    ctx.globalAlpha = 1.0;
  }
  if (drag !== null) {
    const [a, b] = drag.mode === "create"
      ? [drag.anchor, drag.cursor]
      : dragResizeSpan(drag);
    ctx.strokeStyle = "#e9ecef";
    ctx.setLineDash([4, 3]);
    ctx.strokeRect(timeToX(Math.min(a, b)), 4,
      timeToX(Math.max(a, b)) - timeToX(Math.min(a, b)), h - 8);
    ctx.setLineDash([]);
  }
  const times = store.timestamps;
  const px = timeToX(times[clock.frame]);
  ctx.strokeStyle = "#fa5252";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(px, 0);
  ctx.lineTo(px, h);
  ctx.stroke();
  ctx.lineWidth = 1;
}

function dragResizeSpan(d: Drag & { mode: "resize" }): [number, number] {
  return d.edge === "start"
    ? [d.cursor, d.label.tEnd]
    : [d.label.tStart, d.cursor];
}

function drawArena(): void {
  if (store === null || clock === null) {
    return;
  }
  const view = { width: arenaCanvas.width, height: arenaCanvas.height };
  const ctx = arenaCanvas.getContext("2d")!;
  const session = {
    animalIds: [...store.animalIds],
    timestamps: [...store.timestamps],
    frames: store.frames as number[][][],
    arena: store.arena,
    labels: [...store.labels],
  };
  renderFrame(session, clock.frame, new CanvasTarget(ctx, view), view);
}

function refreshControls(): void {
  const loaded = store !== null;
  playButton.disabled = !loaded;
  exportButton.disabled = !loaded;
  undoButton.disabled = !loaded || !store!.canUndo;
  redoButton.disabled = !loaded || !store!.canRedo;
  deleteButton.disabled = selected === null;
  playButton.textContent = clock !== null && clock.isPlaying ? "Pause" : "Play";
  if (store !== null && clock !== null) {
    const t = store.timestamps[clock.frame];
    const here = store.labelAt(t);
    status.textContent = `frame ${clock.frame + 1}/${store.frameCount}` +
      (here !== null ? `  ${here.activity}` : "");
  } else {
    status.textContent = "no session loaded";
  }
}

function applyAction(action: AnnotationAction): void {
  if (store === null) {
    return;
  }
  const result = store.apply(action);
  if (result.ok) {
    selected = action.kind === "delete" ? null
      : store.labelAt(action.interval.tStart);
    hideBanner();
  }
  refreshControls();
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (file === undefined) {
    return;
  }
  try {
    const session = parseSession(await file.text());
    store = new SessionStore(session);
    clock = new PlaybackClock(store.frameCount);
    selected = null;
    drag = null;
    hideBanner();
    store.onReject((reason) => showBanner(reason, "reject"));
  } catch (err) {
    store = null;
    clock = null;
    const detail = err instanceof SchemaError ? err.message : String(err);
    showBanner(detail, "error");
  }
  refreshControls();
});

playButton.addEventListener("click", () => {
  if (clock === null) {
    return;
  }
  if (clock.isPlaying) {
    clock.pause();
  } else {
    clock.play();
  }
  refreshControls();
});

speedSelect.addEventListener("change", () => {
  clock?.setSpeed(Number(speedSelect.value));
});

activitySelect.addEventListener("change", () => {
  if (selected !== null) {
    applyAction({
      kind: "relabel",
      interval: { tStart: selected.tStart, tEnd: selected.tEnd },
      activity: activitySelect.value as Activity,
    });
  }
});

undoButton.addEventListener("click", () => {
  store?.undo();
  selected = null;
  refreshControls();
});

redoButton.addEventListener("click", () => {
  store?.redo();
  selected = null;
  refreshControls();
});

deleteButton.addEventListener("click", () => {
  if (selected !== null) {
    applyAction({
      kind: "delete",
      interval: { tStart: selected.tStart, tEnd: selected.tEnd },
    });
  }
});

exportButton.addEventListener("click", () => {
  if (store === null) {
    return;
  }
  const blob = new Blob([labelsJson(store.labels)],
    { type: "application/json" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "labels.json";
  link.click();
  URL.revokeObjectURL(link.href);
});

timelineCanvas.addEventListener("mousedown", (event) => {
  if (store === null || clock === null) {
    return;
  }
  const x = event.offsetX;
  const t = xToTime(x);
  for (const label of store.labels) {
    if (Math.abs(x - timeToX(label.tStart)) <= EDGE_GRAB_PX) {
      drag = { mode: "resize", label, edge: "start", cursor: label.tStart };
      return;
    }
    if (Math.abs(x - timeToX(label.tEnd)) <= EDGE_GRAB_PX) {
      drag = { mode: "resize", label, edge: "end", cursor: label.tEnd };
      return;
    }
  }
  const here = store.labelAt(t);
  if (here !== null) {
    selected = here;
    activitySelect.value = here.activity;
    refreshControls();
    return;
  }
  drag = { mode: "create", anchor: t, cursor: t };
});

timelineCanvas.addEventListener("mousemove", (event) => {
  if (drag !== null) {
    drag.cursor = xToTime(event.offsetX);
  }
});

window.addEventListener("mouseup", () => {
  if (drag === null) {
    return;
  }
  const done = drag;
  drag = null;
  if (done.mode === "create") {
    const tStart = Math.min(done.anchor, done.cursor);
    const tEnd = Math.max(done.anchor, done.cursor);
    if (tEnd > tStart) {
      applyAction({
        kind: "create",
        interval: { tStart, tEnd },
        activity: activitySelect.value as Activity,
      });
    }
  } else {
    const [tStart, tEnd] = dragResizeSpan(done);
    if (tEnd > tStart &&
        (tStart !== done.label.tStart || tEnd !== done.label.tEnd)) {
      applyAction({ kind: "resize", interval: { tStart, tEnd } });
    }
  }
});

timelineCanvas.addEventListener("dblclick", (event) => {
  if (store === null || clock === null) {
    return;
  }
  const t = xToTime(event.offsetX);
  const times = store.timestamps;
  let frame = 0;
  while (frame < times.length - 1 && times[frame + 1] <= t) {
    frame += 1;
  }
  clock.pause();
  clock.scrubTo(frame);
  refreshControls();
});

window.addEventListener("keydown", (event) => {
  if (store === null || clock === null) {
    return;
  }
  if (event.key === " ") {
    event.preventDefault();
    playButton.click();
  } else if (event.key === "ArrowRight") {
    clock.pause();
    clock.scrubTo(clock.frame + 1);
  } else if (event.key === "ArrowLeft") {
    clock.pause();
    clock.scrubTo(clock.frame - 1);
  } else if (event.key === "Delete" || event.key === "Backspace") {
    deleteButton.click();
  }
});

let lastTick: number | null = null;

function tick(now: number): void {
  if (clock !== null && store !== null) {
    if (lastTick !== null && clock.isPlaying) {
      // Draw only the newest crossed frame; skipping under load is
      // fine, going backwards is not, and advance() guarantees order.
      const crossed = clock.advance((now - lastTick) / 1000);
      if (crossed.length > 0 || clock.atEnd) {
        refreshControls();
      }
    }
    drawArena();
    drawTimeline();
  }
  lastTick = now;
  window.requestAnimationFrame(tick);
}

refreshControls();
window.requestAnimationFrame(tick);
