/** Shared builders for the unit suites. */

import { LabelSpan, Session } from "../src/schema.js";

/**
 * Deterministic session: nFrames at one second spacing, nAnimals
 * walking simple distinct paths inside a 100 x 80 arena.
 */
export function makeSession(
    nFrames: number, nAnimals: number, labels: LabelSpan[] = []): Session {
  const animalIds = [];
  for (let a = 0; a < nAnimals; a++) {
    animalIds.push(`s${a}`);
  }
  const timestamps = [];
  const frames: number[][][] = [];
  for (let f = 0; f < nFrames; f++) {
    timestamps.push(f);
    const frame: number[][] = [];
    for (let a = 0; a < nAnimals; a++) {
      frame.push([
        10 + a * 7 + 0.25 * f,
        12 + a * 5 + 3 * Math.sin(0.1 * f + a),
      ]);
    }
    frames.push(frame);
  }
  return {
    animalIds,
    timestamps,
    frames,
    arena: { width: 100, height: 80 },
    labels,
  };
}

/** JSON text in the toolkit's on-disk shape for parseSession tests. */
export function sessionText(session: Session): string {
  return JSON.stringify({
    format: "flock-session",
    version: 1,
    animal_ids: session.animalIds,
    timestamps: session.timestamps,
    frames: session.frames,
    arena: session.arena,
    labels: session.labels.map((l) => ({
      t_start: l.tStart, t_end: l.tEnd, activity: l.activity,
    })),
  }) + "\n";
}

/** Small deterministic generator for fuzz-style cases. */
export class TestRand {
  private state: number;

  constructor(seed: number) {
    this.state = seed % 2147483647;
    if (this.state <= 0) {
      this.state += 2147483646;
    }
  }

  next(): number {
    this.state = (this.state * 48271) % 2147483647;
    return (this.state - 1) / 2147483646;
  }

  below(n: number): number {
    return Math.floor(this.next() * n);
  }

  pick<T>(items: readonly T[]): T {
    return items[this.below(items.length)];
  }
}
