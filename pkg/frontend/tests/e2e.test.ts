/**
 * End-to-end console client tests against the real service binary.
 * Skipped automatically when the `intentflow` CLI is not on PATH.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, mkdirSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ConnectionLost } from "../src/api";
import { RunPoller, type PollState } from "../src/poller";

const PORT = 8390 + Math.floor(Math.random() * 100);
const BASE = `http://127.0.0.1:${PORT}`;

const CARDS = [
  { model_name: "probe-fast", task_type: "probe", latency_ms: 5,
    resource_utilization: 0.2, consumes: ["metrics"], produces: ["metrics"] },
  { model_name: "alloc-a", task_type: "allocate", latency_ms: 4,
    resource_utilization: 0.3, consumes: ["metrics"], produces: ["plan"] },
  { model_name: "report-a", task_type: "report", latency_ms: 2,
    resource_utilization: 0.1, consumes: ["plan"], produces: ["text"] },
];

const INTENT = {
  schema_version: "1",
  intent_id: "console-e2e",
  goal: "end to end from the console client",
  task_requests: [
    { task_key: "measure", task_type: "probe" },
    { task_key: "assign", task_type: "allocate", depends_on: ["measure"] },
    { task_key: "digest", task_type: "report", depends_on: ["assign"] },
  ],
  latency_budget_ms: 100,
  utilization_budget: 0.9,
  combination_count: 1,
};

const hasService = spawnSync("intentflow", ["--help"]).status === 0;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

describe.skipIf(!hasService)("console against a live service", () => {
  let server: ChildProcess;
  const api = new ApiClient((input, init) => fetch(input, init), BASE);

  beforeAll(async () => {
    const root = mkdtempSync(join(tmpdir(), "console-e2e-"));
    const cardsDir = join(root, "cards");
    mkdirSync(cardsDir);
    for (const card of CARDS) {
      writeFileSync(join(cardsDir, `${card.model_name}.json`),
                    JSON.stringify(card));
    }
    writeFileSync(join(root, "keywords.json"), JSON.stringify({
      keywords: { measure: { task_type: "probe" } }, fallbacks: {},
    }));
    const config = join(root, "config.json");
    writeFileSync(config, JSON.stringify({
      model_cards_dir: cardsDir,
      keyword_table: join(root, "keywords.json"),
      data_dir: join(root, "data"),
      journal_dir: join(root, "journal"),
      // wall clock so runs take real seconds and polls observe progress
      clock: "wall",
      wall_scale: 300,
    }));
    server = spawn("intentflow",
                   ["-c", config, "serve", "--port", String(PORT)],
                   { stdio: "ignore" });
    for (let attempt = 0; attempt < 50; attempt += 1) {
      try {
        await api.listRuns();
        return;
      } catch {
        await sleep(200);
      }
    }
    throw new Error("service did not come up");
  }, 20_000);

  afterAll(() => {
    server?.kill();
  });

  it("submitted fixture intent appears in the run list and finishes", async () => {
    const { run_id } = await api.submitIntent(JSON.stringify(INTENT));
    let phase = "";
    for (let attempt = 0; attempt < 100 && phase !== "done"; attempt += 1) {
      phase = (await api.getRun(run_id)).phase;
      await sleep(100);
    }
    expect(phase).toBe("done");
    const { runs } = await api.listRuns();
    expect(runs.map((r) => r.run_id)).toContain(run_id);
    const run = await api.getRun(run_id);
    expect(run.final_report?.combinations.map((c) => c.rank)).toEqual([1]);
    expect(run.stages).toEqual([["measure"], ["assign"], ["digest"]]);
  }, 15_000);

  it("killing the service mid-poll raises the banner state, no crash", async () => {
    const { run_id } = await api.submitIntent(JSON.stringify(
      { ...INTENT, intent_id: "console-e2e-kill" }));
    const states: PollState[] = [];
    const poller = new RunPoller(api, run_id, (s) => states.push(s),
                                 { intervalMs: 100 });
    poller.start();
    await sleep(250); // at least one successful poll
    server.kill();
    await sleep(1500); // polls keep firing against the dead service
    poller.stop();
    expect(states.length).toBeGreaterThan(1);
    expect(states.at(-1)?.disconnected).toBe(true);
  }, 15_000);
});
