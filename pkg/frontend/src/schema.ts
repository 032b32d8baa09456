/**
 * Session and label JSON exchange with the command line toolkit.
 *
 * Both documents carry a format tag and a version number. The viewer
 * refuses anything it does not understand with a message the operator
 * can act on, because a half-parsed session is worse than no session.
 *
 * The label writer mirrors the toolkit's serializer byte for byte:
 * minified JSON, keys in sorted order, labels sorted by t_start, one
 * trailing newline. Export, ingest, re-export has to be a fixed point,
 * and byte equality is the cheapest way to guarantee that.
 */

export const SESSION_FORMAT = "flock-session";
export const SESSION_VERSION = 1;
export const LABELS_FORMAT = "flock-labels";
export const LABELS_VERSION = 1;

export type Activity = "not_active" | "active" | "herd";

export const ACTIVITIES: readonly Activity[] = ["not_active", "active", "herd"];

/** One annotated interval, inclusive start, exclusive end, in seconds. */
export interface LabelSpan {
  tStart: number;
  tEnd: number;
  activity: Activity;
}

export interface Arena {
  width: number;
  height: number;
}

export interface Session {
  animalIds: string[];
  /** Strictly increasing, one entry per frame, in seconds. */
  timestamps: number[];
  /** frames[f][a] = [x, y] of animal a at timestamps[f], arena units. */
  frames: number[][][];
  arena: Arena;
  labels: LabelSpan[];
}

/** Anything wrong with a document we were asked to load. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

function parseObject(text: string, what: string): Record<string, unknown> {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    const detail = err instanceof Error ? err.message : String(err);
    throw new SchemaError(
      `${what} is not valid JSON (truncated or corrupted file?): ${detail}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new SchemaError(`${what} must be a JSON object`);
  }
  return doc as Record<string, unknown>;
}

function requireField(
    doc: Record<string, unknown>, key: string, what: string): unknown {
  if (!(key in doc)) {
    throw new SchemaError(`${what} is missing the "${key}" field`);
  }
  return doc[key];
}

function checkTag(
    doc: Record<string, unknown>, what: string,
    format: string, version: number): void {
  const fmt = requireField(doc, "format", what);
  if (fmt !== format) {
    throw new SchemaError(
      `${what} has format ${JSON.stringify(fmt)}, expected "${format}"`);
  }
  const ver = requireField(doc, "version", what);
  if (ver !== version) {
    throw new SchemaError(
      `${what} uses schema version ${JSON.stringify(ver)} but this viewer ` +
      `reads version ${version}; upgrade the viewer or re-export the file ` +
      `with a matching toolkit`);
  }
}

function isActivity(token: unknown): token is Activity {
  return typeof token === "string" &&
    (ACTIVITIES as readonly string[]).indexOf(token) >= 0;
}

function spanText(tStart: number, tEnd: number): string {
  return `[${tStart}, ${tEnd})`;
}

/** Validate raw label rows: integer bounds, known activity, non-empty. */
function parseLabelRows(rows: unknown, what: string): LabelSpan[] {
  if (!Array.isArray(rows)) {
    throw new SchemaError(`${what}: "labels" must be a list`);
  }
  const out: LabelSpan[] = [];
  rows.forEach((row, i) => {
    if (typeof row !== "object" || row === null || Array.isArray(row)) {
      throw new SchemaError(`${what}: label entry ${i} must be an object`);
    }
    const rec = row as Record<string, unknown>;
    const tStart = rec["t_start"];
    const tEnd = rec["t_end"];
    const activity = rec["activity"];
    if (!Number.isInteger(tStart) || !Number.isInteger(tEnd)) {
      throw new SchemaError(
        `${what}: label entry ${i} needs integer t_start and t_end`);
    }
    if (!isActivity(activity)) {
      throw new SchemaError(
        `${what}: label entry ${i} has unknown activity ` +
        `${JSON.stringify(activity)}; expected one of ${ACTIVITIES.join(", ")}`);
    }
    if ((tEnd as number) <= (tStart as number)) {
      throw new SchemaError(
        `${what}: label entry ${i} has empty interval ` +
        spanText(tStart as number, tEnd as number));
    }
    out.push({ tStart: tStart as number, tEnd: tEnd as number, activity });
  });
  out.sort((a, b) => a.tStart - b.tStart);
  for (let i = 1; i < out.length; i++) {
    if (out[i].tStart < out[i - 1].tEnd) {
      throw new SchemaError(
        `${what}: labels ${spanText(out[i - 1].tStart, out[i - 1].tEnd)} and ` +
        `${spanText(out[i].tStart, out[i].tEnd)} overlap`);
    }
  }
  return out;
}

/** Parse a labels document exported by this UI or by the toolkit. */
export function parseLabels(text: string): LabelSpan[] {
  const what = "label document";
  const doc = parseObject(text, what);
  checkTag(doc, what, LABELS_FORMAT, LABELS_VERSION);
  return parseLabelRows(requireField(doc, "labels", what), what);
}

/** Parse a session document produced by the toolkit's export command. */
export function parseSession(text: string): Session {
  const what = "session document";
  const doc = parseObject(text, what);
  checkTag(doc, what, SESSION_FORMAT, SESSION_VERSION);

  const rawIds = requireField(doc, "animal_ids", what);
  if (!Array.isArray(rawIds) || rawIds.length === 0) {
    throw new SchemaError(`${what}: "animal_ids" must be a non-empty list`);
  }
  const animalIds = rawIds.map((v) => String(v));

  const rawTimes = requireField(doc, "timestamps", what);
  if (!Array.isArray(rawTimes) || rawTimes.length === 0) {
    throw new SchemaError(`${what}: "timestamps" must be a non-empty list`);
  }
  const timestamps: number[] = [];
  rawTimes.forEach((t, i) => {
    if (!Number.isInteger(t)) {
      throw new SchemaError(`${what}: timestamp ${i} is not an integer`);
    }
    if (i > 0 && (t as number) <= timestamps[i - 1]) {
      throw new SchemaError(
        `${what}: timestamps must be strictly increasing ` +
        `(entry ${i} is ${t} after ${timestamps[i - 1]})`);
    }
    timestamps.push(t as number);
  });

  const rawFrames = requireField(doc, "frames", what);
  if (!Array.isArray(rawFrames) || rawFrames.length !== timestamps.length) {
    const got = Array.isArray(rawFrames) ? rawFrames.length : "non-list";
    throw new SchemaError(
      `${what}: expected ${timestamps.length} frames to match the ` +
      `timestamps, got ${got}`);
  }
  const frames: number[][][] = rawFrames.map((frame, f) => {
    if (!Array.isArray(frame) || frame.length !== animalIds.length) {
      throw new SchemaError(
        `${what}: frame ${f} must list ${animalIds.length} animal positions`);
    }
    return frame.map((pos, a) => {
      if (!Array.isArray(pos) || pos.length !== 2 ||
          typeof pos[0] !== "number" || typeof pos[1] !== "number" ||
          !Number.isFinite(pos[0]) || !Number.isFinite(pos[1])) {
        throw new SchemaError(
          `${what}: frame ${f}, animal ${a} must be a finite [x, y] pair`);
      }
      return [pos[0], pos[1]];
    });
  });

  const rawArena = requireField(doc, "arena", what);
  if (typeof rawArena !== "object" || rawArena === null) {
    throw new SchemaError(`${what}: "arena" must be an object`);
  }
  const arenaRec = rawArena as Record<string, unknown>;
  const width = arenaRec["width"];
  const height = arenaRec["height"];
  if (typeof width !== "number" || typeof height !== "number" ||
      !(width > 0) || !(height > 0)) {
    throw new SchemaError(
      `${what}: arena needs positive numeric width and height`);
  }

  const labels = parseLabelRows(doc["labels"] ?? [], what);
  return { animalIds, timestamps, frames, arena: { width, height }, labels };
}

/**
 * Serialize labels exactly as the toolkit does.
 *
 * Built by hand rather than JSON.stringify so the key order inside each
 * entry (activity, t_end, t_start) and around the document (format,
 * labels, version) is pinned, matching the sorted-key minified output
 * the ingest command produces on re-export.
 */
export function labelsJson(labels: readonly LabelSpan[]): string {
  const sorted = [...labels].sort((a, b) => a.tStart - b.tStart);
  const items = sorted.map((l) => {
    if (!Number.isInteger(l.tStart) || !Number.isInteger(l.tEnd)) {
      throw new SchemaError(
        `cannot export non-integer interval ${spanText(l.tStart, l.tEnd)}`);
    }
    if (!isActivity(l.activity)) {
      throw new SchemaError(
        `cannot export unknown activity ${JSON.stringify(l.activity)}`);
    }
    return `{"activity":"${l.activity}","t_end":${l.tEnd},"t_start":${l.tStart}}`;
  });
  return `{"format":"${LABELS_FORMAT}","labels":[${items.join(",")}],` +
    `"version":${LABELS_VERSION}}\n`;
}
