// Input settling: at most one message per settled input, where an input
// settles at drag-end or after the 100 ms throttle window, whichever comes
// first. 10 Hz matches the server tick rate.

export const THROTTLE_MS = 100;

type Clock = () => number;
type Schedule = (fn: () => void, ms: number) => unknown;
type Cancel = (handle: unknown) => void;

export class InputSettler {
  private lastEmit: number | null = null;
  private pending: number | null = null;
  private timer: unknown = null;

  constructor(
    private emit: (value: number) => void,
    private windowMs: number = THROTTLE_MS,
    private now: Clock = () => Date.now(),
    private schedule: Schedule = (fn, ms) => setTimeout(fn, ms),
    private cancel: Cancel = (handle) => clearTimeout(handle as number),
  ) {}

  /** Continuous widget movement while dragging. */
  move(value: number): void {
    const t = this.now();
    if (this.lastEmit === null || t - this.lastEmit >= this.windowMs) {
      this.fire(value, t);
      return;
    }
    this.pending = value;
    if (this.timer === null) {
      const remaining = this.windowMs - (t - this.lastEmit);
      this.timer = this.schedule(() => this.flush(), remaining);
    }
  }

  /** Drag end: the input settles immediately. */
  release(value: number): void {
    this.clearTimer();
    this.pending = null;
    this.fire(value, this.now());
  }

  private flush(): void {
    this.timer = null;
    if (this.pending !== null) {
      const value = this.pending;
      this.pending = null;
      this.fire(value, this.now());
    }
  }

  private fire(value: number, t: number): void {
    this.lastEmit = t;
    this.emit(value);
  }

  private clearTimer(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
  }
}
