import { describe, expect, it } from "vitest";

import { FRAME_S, GazeSampler, SamplerHooks } from "../src/sampler.js";

// deterministic fake clock driving setInterval callbacks by hand
class FakeTimers {
  now = 0;
  private fns = new Map<number, { fn: () => void; ms: number; next: number }>();
  private id = 0;

  hooks(random: () => number = () => 0.5): SamplerHooks {
    return {
      setInterval: (fn, ms) => {
        this.id += 1;
        this.fns.set(this.id, { fn, ms, next: this.now + ms });
        return this.id;
      },
      clearInterval: (id) => void this.fns.delete(id),
      now: () => this.now,
      random,
    };
  }

  advance(ms: number): void {
    const end = this.now + ms;
    for (;;) {
      let soonest: { fn: () => void; ms: number; next: number } | null = null;
      for (const entry of this.fns.values()) {
        if (entry.next <= end && (!soonest || entry.next < soonest.next)) {
          soonest = entry;
        }
      }
      if (!soonest) break;
      this.now = soonest.next;
      soonest.next += soonest.ms;
      soonest.fn();
    }
    this.now = end;
  }
}

describe("gaze sampler", () => {
  it("holds 75 +- 5 Hz cadence", () => {
    const timers = new FakeTimers();
    const out: { t: number }[] = [];
    const sampler = new GazeSampler(
      timers.hooks(),
      () => [100, 100],
      (s) => out.push(s)
    );
    sampler.start();
    timers.advance(2000);
    const hz = sampler.measuredHz();
    expect(hz).toBeGreaterThanOrEqual(70);
    expect(hz).toBeLessThanOrEqual(80);
    expect(out.length).toBeGreaterThanOrEqual(140);
    sampler.stop();
    const n = out.length;
    timers.advance(500);
    expect(out.length).toBe(n);
  });

  it("timestamps sit on the exact 75 Hz frame grid", () => {
    const timers = new FakeTimers();
    const out: { t: number }[] = [];
    const sampler = new GazeSampler(timers.hooks(), () => [0, 0],
                                    (s) => out.push(s));
    sampler.start();
    timers.advance(1000);
    out.forEach((sample, i) => {
      expect(sample.t).toBeCloseTo(i * FRAME_S, 12);
    });
    expect(sampler.lastEmittedT()).toBeCloseTo((out.length - 1) * FRAME_S, 12);
  });

  it("continues the frame counter across reconnects", () => {
    const timers = new FakeTimers();
    const out: { t: number }[] = [];
    const sampler = new GazeSampler(timers.hooks(), () => [0, 0],
                                    (s) => out.push(s), 300);
    sampler.start();
    timers.advance(100);
    expect(out[0].t).toBeCloseTo(300 * FRAME_S, 12);
  });

  it("emits invalid samples while the pointer is off the board", () => {
    const timers = new FakeTimers();
    const out: { valid: boolean }[] = [];
    let pos: [number, number] | null = null;
    const sampler = new GazeSampler(timers.hooks(), () => pos,
                                    (s) => out.push(s));
    sampler.start();
    timers.advance(200);
    expect(out.every((s) => !s.valid)).toBe(true);
    pos = [10, 10];
    timers.advance(200);
    expect(out[out.length - 1].valid).toBe(true);
  });

  it("jitter perturbs positions without touching the cadence", () => {
    const timers = new FakeTimers();
    const out: { x: number; y: number }[] = [];
    let flip = 0;
    const sampler = new GazeSampler(
      timers.hooks(() => (flip++ % 7) / 7 + 1e-6),
      () => [100, 100],
      (s) => out.push(s)
    );
    sampler.jitterEnabled = true;
    sampler.start();
    timers.advance(1000);
    expect(sampler.measuredHz()).toBeGreaterThanOrEqual(70);
    const displaced = out.filter((s) => s.x !== 100 || s.y !== 100);
    expect(displaced.length).toBeGreaterThan(out.length / 2);
    // jitter is zero-mean-ish at sigma 12: positions stay near the pointer
    const meanX = out.reduce((a, s) => a + s.x, 0) / out.length;
    expect(Math.abs(meanX - 100)).toBeLessThan(15);
  });
});
