// Request pacing for slider-driven calls: a leading-plus-trailing throttle
// caps the request rate while guaranteeing the final value always ships,
// and a sequence gate drops responses that arrive after a newer one.

type Job = () => void;

export class TrailingThrottle {
  private lastRun = Number.NEGATIVE_INFINITY;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: Job | null = null;

  constructor(readonly intervalMs: number) {}

  /** Run now if the rate allows, else queue to run at the next slot.
      A newer job replaces any queued one. */
  schedule(job: Job): void {
    const now = Date.now();
    if (this.timer === null && now - this.lastRun >= this.intervalMs) {
      this.lastRun = now;
      job();
      return;
    }
    this.pending = job;
    if (this.timer === null) {
      const wait = Math.max(0, this.lastRun + this.intervalMs - now);
      this.timer = setTimeout(() => this.runPending(), wait);
    }
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = null;
  }

  private runPending(): void {
    this.timer = null;
    const job = this.pending;
    this.pending = null;
    if (job) {
      this.lastRun = Date.now();
      job();
    }
  }
}

export class SequenceGate {
  private next = 1;
  private newestAccepted = 0;

  claim(): number {
    return this.next++;
  }

  /** True if this response is newer than anything already shown. */
  accept(seq: number): boolean {
    if (seq <= this.newestAccepted) {
      return false;
    }
    this.newestAccepted = seq;
    return true;
  }
}
