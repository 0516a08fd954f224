import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { RateLimiter } from "../src/debounce.js";

describe("RateLimiter", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("coalesces rapid input to at most one call per interval", () => {
    const limiter = new RateLimiter(50);
    const calls: number[] = [];
    for (let t = 0; t < 200; t += 5) {
      limiter.schedule(() => calls.push(Date.now()));
      vi.advanceTimersByTime(5);
    }
    vi.advanceTimersByTime(100);
    expect(calls.length).toBeLessThanOrEqual(5); // 200ms / 50ms + trailing
    for (let i = 1; i < calls.length; i++) {
      expect(calls[i] - calls[i - 1]).toBeGreaterThanOrEqual(50);
    }
  });

  it("always fires the trailing (latest) action", () => {
    const limiter = new RateLimiter(50);
    let latest = -1;
    for (let k = 0; k < 10; k++) {
      limiter.schedule(() => (latest = k));
    }
    vi.advanceTimersByTime(60);
    expect(latest).toBe(9);
  });

  it("release settles with no further actions", () => {
    const limiter = new RateLimiter(50);
    let count = 0;
    limiter.schedule(() => count++);
    vi.advanceTimersByTime(500);
    expect(count).toBe(1);
    expect(limiter.busy).toBe(false);
    vi.advanceTimersByTime(500);
    expect(count).toBe(1);
  });
});
