/** Typed client for the service API.  The fetch implementation is
 * injectable so tests can run without a server. */

import type {
  ErrorTriple,
  RunListEntry,
  RunPayload,
  SessionPayload,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Server answered with an error triple. */
export class ApiError extends Error {
  constructor(public status: number, public triple: ErrorTriple) {
    super(`${triple.error_kind}: ${triple.message}`);
  }
}

/** Network-level failure: the service is unreachable. */
export class ConnectionLost extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
  }
}

export class ApiClient {
  constructor(private fetchImpl: FetchLike = (...args) => fetch(...args),
              private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (cause) {
      throw new ConnectionLost(cause);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      const triple = (body && typeof body === "object"
                      && "error_kind" in (body as object))
        ? (body as ErrorTriple)
        : { error_kind: `HTTP${response.status}`, field_path: null,
            message: response.statusText };
      throw new ApiError(response.status, triple);
    }
    return body as T;
  }

  submitIntent(document: string): Promise<{ run_id: string }> {
    return this.request("/api/intents", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: document,
    });
  }

  openSession(): Promise<{ session_id: string }> {
    return this.request("/api/sessions", { method: "POST" });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  sendUtterance(sessionId: string, text: string): Promise<{ run_id: string }> {
    return this.request(
      `/api/sessions/${encodeURIComponent(sessionId)}/utterances`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      });
  }

  getRun(runId: string): Promise<RunPayload> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}`);
  }

  listRuns(): Promise<{ runs: RunListEntry[] }> {
    return this.request("/api/runs");
  }
}
