/**
 * Frame clock for replaying a session.
 *
 * Frames sit one data-second apart, so at speed s the cursor moves s
 * frames per wall second. advance() reports every frame index the
 * cursor crossed, in ascending order; the caller may draw each one or
 * jump straight to the newest when it falls behind, but nothing is
 * ever reported out of order. Scrubbing snaps the cursor onto the
 * exact frame asked for.
 */

export class PlaybackClock {
  private cursor = 0;
  private speedValue = 1;
  private playing = false;

  constructor(private readonly frameCount: number) {
    if (!Number.isInteger(frameCount) || frameCount <= 0) {
      throw new RangeError(`frame count must be a positive integer, ` +
        `got ${frameCount}`);
    }
  }

  /** Current frame index, always a valid index into the session. */
  get frame(): number {
    return Math.floor(this.cursor);
  }

  get speed(): number {
    return this.speedValue;
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  get atEnd(): boolean {
    return this.cursor >= this.frameCount - 1;
  }

  play(): void {
    // Pressing play on the final frame restarts from the top.
    if (this.atEnd) {
      this.cursor = 0;
    }
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  setSpeed(multiplier: number): void {
    if (!Number.isFinite(multiplier) || multiplier <= 0) {
      throw new RangeError(`speed must be a positive number, ` +
        `got ${multiplier}`);
    }
    this.speedValue = multiplier;
  }

  /** Jump to a frame. Fractions round, out-of-range clamps. */
  scrubTo(frame: number): number {
    const target = Math.min(
      Math.max(Math.round(frame), 0), this.frameCount - 1);
    this.cursor = target;
    return target;
  }

  /**
   * Move the cursor forward by wallSeconds of real time and list the
   * frames it crossed, oldest first. Playback parks on the final frame
   * and pauses itself once the session runs out.
   */
  advance(wallSeconds: number): number[] {
    if (!this.playing || !(wallSeconds > 0)) {
      return [];
    }
    const limit = this.frameCount - 1;
    const target = Math.min(this.cursor + this.speedValue * wallSeconds, limit);
    const crossed: number[] = [];
    for (let f = Math.floor(this.cursor) + 1; f <= Math.floor(target); f++) {
      crossed.push(f);
    }
    this.cursor = target;
    if (this.atEnd) {
      this.playing = false;
    }
    return crossed;
  }
}

/** Frame index whose timestamp equals t exactly, or -1. */
export function frameForTimestamp(
    timestamps: readonly number[], t: number): number {
  let lo = 0;
  let hi = timestamps.length - 1;
  while (lo <= hi) {
    const mid = (lo + hi) >> 1;
    if (timestamps[mid] === t) {
      return mid;
    }
    if (timestamps[mid] < t) {
      lo = mid + 1;
    } else {
      hi = mid - 1;
    }
  }
  return -1;
}
