import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { RunPoller, type PollState } from "../src/poller";
import { runK3 } from "./fixtures";

type FetchStub = (input: string, init?: RequestInit) => Promise<Response>;

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function clientWith(stub: FetchStub): ApiClient {
  return new ApiClient(stub);
}

describe("run poller", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("polls until the run reaches a terminal phase", async () => {
    const running = { ...runK3(), phase: "executing" };
    const payloads = [running, running, runK3()];
    let calls = 0;
    const client = clientWith(async () => jsonResponse(payloads[Math.min(calls++, 2)]));
    const states: PollState[] = [];
    const poller = new RunPoller(client, "r-x", (s) => states.push(s));
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(states.at(-1)?.terminal).toBe(false);
    await vi.advanceTimersByTimeAsync(1000);
    await vi.advanceTimersByTimeAsync(1000);
    expect(states.at(-1)?.terminal).toBe(true);
    expect(states.at(-1)?.run?.phase).toBe("done");
    const before = calls;
    await vi.advanceTimersByTimeAsync(5000);
    expect(calls).toBe(before); // stopped after terminal
  });

  it("marks disconnect instead of crashing when the service dies mid-poll", async () => {
    let healthy = true;
    const client = clientWith(async () => {
      if (healthy) return jsonResponse({ ...runK3(), phase: "executing" });
      throw new TypeError("fetch failed");
    });
    const states: PollState[] = [];
    const poller = new RunPoller(client, "r-x", (s) => states.push(s));
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(states.at(-1)?.disconnected).toBe(false);

    healthy = false; // service killed mid-poll
    await vi.advanceTimersByTimeAsync(1000);
    expect(states.at(-1)?.disconnected).toBe(true);
    expect(states.at(-1)?.run?.phase).toBe("executing"); // last payload kept

    // still alive and retrying with backoff
    await vi.advanceTimersByTimeAsync(10_000);
    expect(states.at(-1)?.disconnected).toBe(true);

    healthy = true; // service comes back
    await vi.advanceTimersByTimeAsync(10_000);
    expect(states.at(-1)?.disconnected).toBe(false);
  });

  it("backs off while disconnected and resets on recovery", async () => {
    const client = clientWith(async () => {
      throw new TypeError("fetch failed");
    });
    const poller = new RunPoller(client, "r-x", () => {},
                                 { intervalMs: 1000, backoffFactor: 2,
                                   maxIntervalMs: 8000 });
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(poller.nextDelay()).toBe(1000);   // first failure
    await vi.advanceTimersByTimeAsync(1000);
    expect(poller.nextDelay()).toBe(2000);
    await vi.advanceTimersByTimeAsync(2000);
    expect(poller.nextDelay()).toBe(4000);
    await vi.advanceTimersByTimeAsync(4000);
    expect(poller.nextDelay()).toBe(8000);
    await vi.advanceTimersByTimeAsync(8000);
    expect(poller.nextDelay()).toBe(8000);   // capped
    poller.stop();
  });

  it("treats 404 as not-found and stops", async () => {
    const client = clientWith(async () => jsonResponse(
      { error_kind: "UnknownRun", field_path: null, message: "no run" }, 404));
    const states: PollState[] = [];
    const poller = new RunPoller(client, "r-ghost", (s) => states.push(s));
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(states.at(-1)?.notFound).toBe(true);
    expect(states.at(-1)?.terminal).toBe(true);
  });
});
