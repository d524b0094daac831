import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { SequenceGate, TrailingThrottle } from "../src/scheduler.js";

describe("TrailingThrottle", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("runs the first job immediately", () => {
    const throttle = new TrailingThrottle(250);
    const runs: number[] = [];
    throttle.schedule(() => runs.push(1));
    expect(runs).toEqual([1]);
  });

  it("merges a burst into leading plus trailing with the last value", () => {
    const throttle = new TrailingThrottle(250);
    const runs: number[] = [];
    for (let v = 0; v <= 10; v++) {
      throttle.schedule(() => runs.push(v));
      vi.advanceTimersByTime(5);
    }
    expect(runs).toEqual([0]);
    vi.advanceTimersByTime(250);
    expect(runs).toEqual([0, 10]);
  });

  it("caps a sustained scrub at the configured rate", () => {
    const throttle = new TrailingThrottle(250);
    const runs: number[] = [];
    for (let v = 0; v < 100; v++) {
      throttle.schedule(() => runs.push(v));
      vi.advanceTimersByTime(10); // 1000 ms of scrubbing
    }
    vi.advanceTimersByTime(250);
    expect(runs.length).toBeLessThanOrEqual(1 + Math.ceil(1000 / 250) + 1);
    expect(runs[runs.length - 1]).toBe(99); // trailing edge carries the final value
  });

  it("spaced calls all run", () => {
    const throttle = new TrailingThrottle(250);
    const runs: number[] = [];
    for (let v = 0; v < 3; v++) {
      throttle.schedule(() => runs.push(v));
      vi.advanceTimersByTime(300);
    }
    expect(runs).toEqual([0, 1, 2]);
  });

  it("cancel drops the queued trailing job", () => {
    const throttle = new TrailingThrottle(250);
    const runs: number[] = [];
    throttle.schedule(() => runs.push(0));
    throttle.schedule(() => runs.push(1));
    throttle.cancel();
    vi.advanceTimersByTime(1000);
    expect(runs).toEqual([0]);
  });
});

describe("SequenceGate", () => {
  it("accepts in-order completions", () => {
    const gate = new SequenceGate();
    const a = gate.claim();
    const b = gate.claim();
    expect(gate.accept(a)).toBe(true);
    expect(gate.accept(b)).toBe(true);
  });

  it("drops a stale response that finishes after a newer one", () => {
    const gate = new SequenceGate();
    const slow = gate.claim();
    const fast = gate.claim();
    expect(gate.accept(fast)).toBe(true);
    expect(gate.accept(slow)).toBe(false);
  });
});
