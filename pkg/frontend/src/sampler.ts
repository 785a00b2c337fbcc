// 75 Hz pointer-as-gaze sampler. Timestamps advance on the exact frame
// grid (tick / 75 s) regardless of timer wobble, which is what the
// engine's window resampler expects; the measured wall-clock cadence is
// exposed for the status bar.

export const FRAME_S = 1 / 75;

export interface SamplerHooks {
  setInterval: (fn: () => void, ms: number) => number;
  clearInterval: (id: number) => void;
  now: () => number; // milliseconds
  random: () => number;
}

export const browserHooks: SamplerHooks = {
  setInterval: (fn, ms) => setInterval(fn, ms) as unknown as number,
  clearInterval: (id) => clearInterval(id),
  now: () => performance.now(),
  random: Math.random,
};

export interface GazeSampleOut {
  t: number;
  x: number;
  y: number;
  valid: boolean;
}

export class GazeSampler {
  private timer: number | null = null;
  private tick = 0;
  private sent: number[] = []; // wall-clock ms of recent emissions
  jitterEnabled = false;
  jitterSigmaMm = 12;

  constructor(
    private readonly hooks: SamplerHooks,
    private readonly getPointerMm: () => [number, number] | null,
    private readonly emit: (sample: GazeSampleOut) => void,
    startTick = 0
  ) {
    this.tick = startTick;
  }

  get currentTick(): number {
    return this.tick;
  }

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = this.hooks.setInterval(() => this.sample(), 1000 * FRAME_S);
  }

  stop(): void {
    if (this.timer !== null) {
      this.hooks.clearInterval(this.timer);
      this.timer = null;
    }
  }

  private gaussian(): number {
    // Box-Muller; random() in [0,1)
    const u = Math.max(this.hooks.random(), 1e-12);
    const v = this.hooks.random();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  sample(): void {
    const pos = this.getPointerMm();
    const t = this.tick * FRAME_S;
    this.tick += 1;
    if (pos === null) {
      this.emit({ t, x: 0, y: 0, valid: false });
    } else {
      let [x, y] = pos;
      if (this.jitterEnabled) {
        x += this.gaussian() * this.jitterSigmaMm;
        y += this.gaussian() * this.jitterSigmaMm;
      }
      this.emit({ t, x, y, valid: true });
    }
    const now = this.hooks.now();
    this.sent.push(now);
    while (this.sent.length > 0 && now - this.sent[0] > 2000) {
      this.sent.shift();
    }
  }

  // measured cadence over the trailing two seconds, Hz
  measuredHz(): number {
    if (this.sent.length < 2) return 0;
    const span = (this.sent[this.sent.length - 1] - this.sent[0]) / 1000;
    return span > 0 ? (this.sent.length - 1) / span : 0;
  }

  // session clock for an action fired right now: the last emitted frame
  lastEmittedT(): number {
    return Math.max(0, this.tick - 1) * FRAME_S;
  }
}
