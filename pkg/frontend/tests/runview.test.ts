import { describe, expect, it } from "vitest";

import type { PollState } from "../src/poller";
import {
  renderComparisonTable,
  renderRunView,
  renderScores,
  renderStageColumns,
} from "../src/views/runview";
import { runFailedTask, runK3 } from "./fixtures";

function stateFor(run: ReturnType<typeof runK3>): PollState {
  return { run, disconnected: false, notFound: false, terminal: true,
           attempts: 0 };
}

describe("run view", () => {
  it("shows the k=3 fixture as three comparison rows in rank order", () => {
    const html = renderComparisonTable(runK3());
    const ranks = [...html.matchAll(/data-rank="(\d+)"/g)].map((m) => m[1]);
    expect(ranks).toEqual(["1", "2", "3"]);
  });

  it("renders exactly the ranks and statuses of the final report", () => {
    const run = runK3();
    const html = renderComparisonTable(run);
    for (const entry of run.final_report!.combinations) {
      expect(html).toContain(`data-rank="${entry.rank}"`);
      expect(html).toContain(`combo-${entry.status}`);
    }
    expect(html).toContain("best-badge");
  });

  it("lays out stage columns from the server-computed stages", () => {
    const run = runK3();
    const html = renderStageColumns(run);
    const columns = [...html.matchAll(/data-stage="(\d+)"/g)].map((m) => m[1]);
    expect(columns).toEqual(["0", "1", "2"]);
    for (const stage of run.stages!) {
      for (const key of stage) {
        expect(html).toContain(`data-task="${key}"`);
      }
    }
  });

  it("flags a failed task node with its error code", () => {
    const run = runFailedTask();
    const html = renderStageColumns(run);
    expect(html).toContain("node-failed");
    expect(html).toContain("ModalityMismatch");
  });

  it("renders full scores without reasons for the k=3 fixture", () => {
    const html = renderScores(runK3());
    expect(html).toContain("planning: 1");
    expect(html).not.toContain("reason");
  });

  it("renders reasons when scores dip below one", () => {
    const html = renderScores(runFailedTask());
    expect(html).toContain("score-partial");
    expect(html).toContain("ModalityMismatch");
  });

  it("snapshot: terminal k=3 run view", () => {
    expect(renderRunView(stateFor(runK3()))).toMatchSnapshot();
  });

  it("shows the disconnect banner while polling is interrupted", () => {
    const state = { ...stateFor(runK3()), disconnected: true };
    const html = renderRunView(state);
    expect(html).toContain("banner-disconnect");
    expect(html).toContain("Connection to the service lost");
    // the last known payload stays on screen
    expect(html).toContain(`data-rank="1"`);
  });

  it("renders a not-found page for unknown runs", () => {
    const html = renderRunView({ run: null, disconnected: false,
                                 notFound: true, terminal: true, attempts: 0 });
    expect(html).toContain("Run not found");
  });

  it("escapes payload-controlled strings", () => {
    const run = runK3();
    run.summary = "<script>alert(1)</script>";
    const html = renderRunView(stateFor(run));
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});
