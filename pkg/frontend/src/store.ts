/**
 * Label state for one loaded session.
 *
 * Trajectory frames and timestamps are read-only here; the label list
 * is the only thing this store ever rewrites. Every successful action
 * pushes the previous label list onto the undo stack, so undo restores
 * the exact prior state no matter what the action did.
 *
 * Actions name their target by interval. create reads the interval as
 * the new span. relabel and delete require an exact match with an
 * existing label. resize reads the interval as the new span and
 * reshapes the one existing label it still overlaps; dragging an edge
 * always keeps the new span over the old one, so that label is
 * unambiguous. A resize overlapping two labels would create an overlap
 * and is rejected; one overlapping none has nothing to reshape.
 *
 * Rejected actions leave the store untouched and notify every onReject
 * subscriber, which is where the UI hangs its visual cue.
 */

import {
  ACTIVITIES, Activity, Arena, LabelSpan, SchemaError, Session,
} from "./schema.js";

export type ActionKind = "create" | "resize" | "relabel" | "delete";

export interface Interval {
  tStart: number;
  tEnd: number;
}

export interface AnnotationAction {
  kind: ActionKind;
  interval: Interval;
  /** Required for create and relabel, ignored otherwise. */
  activity?: Activity;
}

export type ActionResult = { ok: true } | { ok: false; reason: string };

function overlaps(a: Interval, b: Interval): boolean {
  return a.tStart < b.tEnd && b.tStart < a.tEnd;
}

function sameSpan(a: Interval, b: Interval): boolean {
  return a.tStart === b.tStart && a.tEnd === b.tEnd;
}

function spanText(iv: Interval): string {
  return `[${iv.tStart}, ${iv.tEnd})`;
}

export class SessionStore {
  private readonly session: Session;
  private labelList: LabelSpan[];
  private undoStack: LabelSpan[][] = [];
  private redoStack: LabelSpan[][] = [];
  private rejectHandlers: Array<(reason: string) => void> = [];

  constructor(session: Session) {
    this.session = session;
    this.labelList = session.labels
      .map((l) => ({ ...l }))
      .sort((a, b) => a.tStart - b.tStart);
    for (const l of this.labelList) {
      const problem = this.boundsProblem(l);
      if (problem !== null) {
        throw new SchemaError(`session label ${problem}`);
      }
    }
  }

  get labels(): readonly LabelSpan[] {
    return this.labelList;
  }

  get timestamps(): readonly number[] {
    return this.session.timestamps;
  }

  get frames(): ReadonlyArray<ReadonlyArray<readonly number[]>> {
    return this.session.frames;
  }

  get animalIds(): readonly string[] {
    return this.session.animalIds;
  }

  get arena(): Arena {
    return this.session.arena;
  }

  get frameCount(): number {
    return this.session.timestamps.length;
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  onReject(handler: (reason: string) => void): void {
    this.rejectHandlers.push(handler);
  }

  /** Label covering timestamp t, or null where the timeline is bare. */
  labelAt(t: number): LabelSpan | null {
    for (const l of this.labelList) {
      if (t >= l.tStart && t < l.tEnd) {
        return { ...l };
      }
    }
    return null;
  }

  apply(action: AnnotationAction): ActionResult {
    const next = this.tryApply(action);
    if (typeof next === "string") {
      for (const handler of this.rejectHandlers) {
        handler(next);
      }
      return { ok: false, reason: next };
    }
    this.undoStack.push(this.labelList);
    this.redoStack = [];
    this.labelList = next;
    return { ok: true };
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) {
      return false;
    }
    this.redoStack.push(this.labelList);
    this.labelList = prev;
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) {
      return false;
    }
    this.undoStack.push(this.labelList);
    this.labelList = next;
    return true;
  }

  private boundsProblem(iv: Interval): string | null {
    const times = this.session.timestamps;
    const first = times[0];
    const last = times[times.length - 1];
    if (!Number.isInteger(iv.tStart) || !Number.isInteger(iv.tEnd)) {
      return `${spanText(iv)} must use whole seconds`;
    }
    if (iv.tEnd <= iv.tStart) {
      return `${spanText(iv)} is empty`;
    }
    // Intervals are half open, so an end of last + 1 still covers only
    // timestamps the session actually has.
    if (iv.tStart < first || iv.tEnd > last + 1) {
      return `${spanText(iv)} falls outside the session timeline ` +
        `[${first}, ${last + 1})`;
    }
    return null;
  }

  /** New label list on success, or a rejection reason. */
  private tryApply(action: AnnotationAction): LabelSpan[] | string {
    const iv = action.interval;
    const problem = this.boundsProblem(iv);
    if (problem !== null) {
      return `${action.kind} rejected: interval ${problem}`;
    }
    switch (action.kind) {
      case "create": {
        if (action.activity === undefined ||
            ACTIVITIES.indexOf(action.activity) < 0) {
          return "create rejected: an activity is required";
        }
        const clash = this.labelList.find((l) => overlaps(l, iv));
        if (clash !== undefined) {
          return `create rejected: ${spanText(iv)} overlaps the existing ` +
            `${clash.activity} label ${spanText(clash)}`;
        }
        return this.withSpan(this.labelList, {
          tStart: iv.tStart, tEnd: iv.tEnd, activity: action.activity,
        });
      }
      case "delete": {
        const idx = this.labelList.findIndex((l) => sameSpan(l, iv));
        if (idx < 0) {
          return `delete rejected: no label exactly at ${spanText(iv)}`;
        }
        return this.labelList.filter((_, i) => i !== idx);
      }
      case "relabel": {
        if (action.activity === undefined ||
            ACTIVITIES.indexOf(action.activity) < 0) {
          return "relabel rejected: an activity is required";
        }
        const idx = this.labelList.findIndex((l) => sameSpan(l, iv));
        if (idx < 0) {
          return `relabel rejected: no label exactly at ${spanText(iv)}`;
        }
        const out = this.labelList.map((l) => ({ ...l }));
        out[idx].activity = action.activity;
        return out;
      }
      case "resize": {
        const hits = this.labelList.filter((l) => overlaps(l, iv));
        if (hits.length === 0) {
          return `resize rejected: no label overlaps ${spanText(iv)}`;
        }
        if (hits.length > 1) {
          return `resize rejected: ${spanText(iv)} would overlap ` +
            `${spanText(hits[1])}`;
        }
        const target = hits[0];
        const rest = this.labelList.filter((l) => l !== target);
        return this.withSpan(rest, {
          tStart: iv.tStart, tEnd: iv.tEnd, activity: target.activity,
        });
      }
    }
  }

  private withSpan(base: readonly LabelSpan[], span: LabelSpan): LabelSpan[] {
    const out = base.map((l) => ({ ...l }));
    out.push(span);
    out.sort((a, b) => a.tStart - b.tStart);
    return out;
  }
}
