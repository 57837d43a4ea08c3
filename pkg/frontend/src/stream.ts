/**
 * Stream-side state machines: monotonic frame display and reconnect backoff.
 * Both are pure (no sockets, no timers) so the transport layer stays thin.
 */

import { FrameMessage } from './protocol.js';

/**
 * Frames must be displayed in index order; anything at or behind the last
 * displayed index is discarded (late arrival after a reconnect, duplicates).
 */
export class FrameGate {
  private lastIndex = -1;
  droppedCount = 0;

  /** Returns true when the frame should be displayed. */
  accept(frame: FrameMessage): boolean {
    if (frame.frameIndex <= this.lastIndex) {
      this.droppedCount += 1;
      return false;
    }
    this.lastIndex = frame.frameIndex;
    return true;
  }

  reset(): void {
    this.lastIndex = -1;
  }
}

export interface BackoffOptions {
  initialMs: number;
  maxMs: number;
  factor: number;
}

const DEFAULT_BACKOFF: BackoffOptions = { initialMs: 250, maxMs: 8000, factor: 2 };

/** Exponential reconnect backoff; a successful connection resets the delay. */
export class ReconnectBackoff {
  private attempt = 0;

  constructor(private readonly opts: BackoffOptions = DEFAULT_BACKOFF) {
    if (opts.initialMs <= 0 || opts.factor < 1 || opts.maxMs < opts.initialMs) {
      throw new Error('invalid backoff options');
    }
  }

  /** Delay before the next connection attempt, in ms. */
  nextDelayMs(): number {
    const delay = Math.min(
      this.opts.maxMs,
      this.opts.initialMs * Math.pow(this.opts.factor, this.attempt),
    );
    this.attempt += 1;
    return delay;
  }

  connected(): void {
    this.attempt = 0;
  }
}
