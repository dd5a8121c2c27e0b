import { readFileSync } from "node:fs";
import { join } from "node:path";

import type { RunPayload, SessionPayload } from "../src/types";

const ROOT = join(__dirname, "..", "fixtures");

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(ROOT, name), "utf-8")) as T;
}

export const runK3 = () => loadFixture<RunPayload>("run_k3.json");
export const runFailedTask = () => loadFixture<RunPayload>("run_failed_task.json");
export const twoTurnSession = () =>
  loadFixture<SessionPayload>("session_two_turns.json");

export interface GatewayErrorCase {
  name: string;
  document: unknown;
  error: { error_kind: string; field_path: string | null; message: string };
}

export const gatewayErrorCases = () =>
  loadFixture<GatewayErrorCase[]>("gateway_errors.json");
export const validIntent = () =>
  loadFixture<Record<string, unknown>>("intent_valid.json");
