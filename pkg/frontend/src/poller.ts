/**
 * Polling loop for one run view: 1 s interval while the run progresses,
 * exponential backoff while the service is unreachable, stop on a terminal
 * phase.  Connection loss is surfaced as state, never as an exception, so a
 * dying service can only ever produce a banner.
 */

import { ApiClient, ApiError, ConnectionLost } from "./api";
import { TERMINAL_PHASES, type RunPayload } from "./types";

export interface PollState {
  run: RunPayload | null;
  disconnected: boolean;
  notFound: boolean;
  terminal: boolean;
  attempts: number;
}

export interface PollOptions {
  intervalMs?: number;
  maxIntervalMs?: number;
  backoffFactor?: number;
}

export class RunPoller {
  readonly state: PollState = {
    run: null, disconnected: false, notFound: false, terminal: false,
    attempts: 0,
  };

  private readonly intervalMs: number;
  private readonly maxIntervalMs: number;
  private readonly backoffFactor: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;
  private inFlight = false;

  constructor(private api: ApiClient, private runId: string,
              private onUpdate: (state: PollState) => void,
              options: PollOptions = {}) {
    this.intervalMs = options.intervalMs ?? 1000;
    this.maxIntervalMs = options.maxIntervalMs ?? 10_000;
    this.backoffFactor = options.backoffFactor ?? 1.5;
  }

  start(): void {
    this.stopped = false;
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** single in-flight poll per view */
  async tick(): Promise<void> {
    if (this.stopped || this.inFlight) return;
    this.inFlight = true;
    try {
      const run = await this.api.getRun(this.runId);
      this.state.run = run;
      this.state.disconnected = false;
      this.state.attempts = 0;
      this.state.terminal = TERMINAL_PHASES.has(run.phase);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.state.notFound = true;
        this.state.terminal = true;
      } else if (error instanceof ConnectionLost) {
        this.state.disconnected = true;
        this.state.attempts += 1;
      } else {
        this.state.disconnected = true;
        this.state.attempts += 1;
      }
    } finally {
      this.inFlight = false;
    }
    this.onUpdate({ ...this.state });
    if (!this.stopped && !this.state.terminal) {
      this.timer = setTimeout(() => void this.tick(), this.nextDelay());
    }
  }

  nextDelay(): number {
    if (!this.state.disconnected) return this.intervalMs;
    const scaled = this.intervalMs
      * this.backoffFactor ** Math.max(0, this.state.attempts - 1);
    return Math.min(scaled, this.maxIntervalMs);
  }
}
