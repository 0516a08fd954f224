/** Trailing-edge rate limiter: runs the latest scheduled action at most once
 * per `intervalMs`. Continuous slider/drag input therefore issues requests
 * at a bounded rate and always ends with the final value. */
export class RateLimiter {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastRun = -Infinity;
  private pending: (() => void) | null = null;

  constructor(private intervalMs: number) {}

  schedule(action: () => void): void {
    this.pending = action;
    if (this.timer !== null) return;
    const now = Date.now();
    const wait = Math.max(0, this.lastRun + this.intervalMs - now);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.lastRun = Date.now();
      const run = this.pending;
      this.pending = null;
      if (run) run();
    }, wait);
  }

  /** True while an action is waiting for its slot. */
  get busy(): boolean {
    return this.timer !== null;
  }
}
