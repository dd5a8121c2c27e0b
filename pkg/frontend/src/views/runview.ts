/**
 * Run view: the task graph laid out in server-computed stage columns, the
 * combination comparison table in rank order, stage scores with reasons,
 * and the formatted summary.  Pure payload-to-HTML functions; everything
 * rendered comes from the API response.
 */

import { banner, esc, num, DISCONNECT_BANNER } from "../render";
import type { PollState } from "../poller";
import type { RecordDoc, RunPayload } from "../types";

function pickStatusRecord(run: RunPayload): RecordDoc | null {
  if (!run.records.length) return null;
  const best = run.final_report?.best_rank;
  if (best != null) {
    const match = run.records.find((r) => r.rank === best);
    if (match) return match;
  }
  return run.records[0] ?? null;
}

function nodeChip(run: RunPayload, taskKey: string): string {
  const node = run.graph?.nodes.find((n) => n.task_key === taskKey);
  const record = pickStatusRecord(run);
  const result = record?.results[taskKey];
  const status = result?.status ?? "pending";
  const errorCode = result?.error?.code;
  const flag = errorCode
    ? `<span class="node-error">${esc(errorCode)}</span>` : "";
  return `<div class="node node-${esc(status)}" data-task="${esc(taskKey)}">`
    + `<span class="node-key">${esc(taskKey)}</span>`
    + `<span class="node-type">${esc(node?.task_type ?? "?")}</span>`
    + flag
    + `</div>`;
}

export function renderStageColumns(run: RunPayload): string {
  if (!run.stages || !run.stages.length) {
    return `<p class="empty">No task graph yet.</p>`;
  }
  const columns = run.stages.map((stage, index) =>
    `<div class="stage-col" data-stage="${index}">`
    + `<div class="stage-label">stage ${index}</div>`
    + stage.map((key) => nodeChip(run, key)).join("")
    + `</div>`).join("");
  return `<div class="stage-grid">${columns}</div>`;
}

export function renderComparisonTable(run: RunPayload): string {
  const entries = run.final_report?.combinations ?? [];
  if (!entries.length) return `<p class="empty">No combinations selected.</p>`;
  const rows = entries.map((entry) => {
    const assignment = Object.entries(entry.assignment)
      .map(([task, model]) => `${esc(task)}→${esc(model)}`).join(", ");
    const observed = entry.observed
      ? `${num(entry.observed.critical_path_latency_ms)} ms / `
        + num(entry.observed.peak_utilization)
      : "—";
    const best = run.final_report?.best_rank === entry.rank
      ? ` <span class="best-badge">best</span>` : "";
    return `<tr class="combo-row combo-${esc(entry.status)}" `
      + `data-rank="${entry.rank}">`
      + `<td>${entry.rank}${best}</td>`
      + `<td>${esc(entry.status)}</td>`
      + `<td>${num(entry.planned.critical_path_latency_ms)} ms / `
      + `${num(entry.planned.peak_utilization)}</td>`
      + `<td>${observed}</td>`
      + `<td class="assignment">${assignment}</td>`
      + `</tr>`;
  }).join("");
  return `<table class="combo-table">`
    + `<thead><tr><th>rank</th><th>status</th><th>planned</th>`
    + `<th>observed</th><th>assignment</th></tr></thead>`
    + `<tbody>${rows}</tbody></table>`;
}

export function renderScores(run: RunPayload): string {
  if (!run.scores) return "";
  const scores = run.scores;
  const chips = (["planning", "selection", "execution"] as const)
    .map((stage) => {
      const value = scores[stage];
      const cls = value === 1 ? "score-full" : "score-partial";
      return `<span class="score ${cls}">${stage}: ${num(value)}</span>`;
    }).join(" ");
  const reasons = scores.reasons.map((reason) =>
    `<li class="reason"><code>${esc(reason.stage)}/${esc(reason.code)}</code> `
    + `${esc(reason.message)}</li>`).join("");
  return `<div class="scores">${chips}</div>`
    + (reasons ? `<ul class="reasons">${reasons}</ul>` : "");
}

export function renderRunView(state: PollState): string {
  if (state.notFound) {
    return `<section class="run-view"><h2>Run not found</h2>`
      + `<p class="empty">This run id does not exist on the service.</p>`
      + `</section>`;
  }
  const run = state.run;
  const pieces: string[] = [];
  if (state.disconnected) pieces.push(DISCONNECT_BANNER);
  if (!run) {
    pieces.push(`<p class="empty">Waiting for the service…</p>`);
    return `<section class="run-view">${pieces.join("")}</section>`;
  }
  pieces.push(
    `<h2>Run <code>${esc(run.run_id)}</code> `
    + `<span class="phase phase-${esc(run.phase)}">${esc(run.phase)}</span></h2>`);
  if (run.error) {
    pieces.push(banner("error",
                       `${run.error.error_kind}: ${run.error.message}`));
  }
  pieces.push(`<h3>Task graph</h3>`, renderStageColumns(run));
  pieces.push(`<h3>Combinations</h3>`, renderComparisonTable(run));
  pieces.push(`<h3>Scores</h3>`, renderScores(run));
  if (run.summary) {
    pieces.push(`<h3>Summary</h3>`,
                `<pre class="summary">${esc(run.summary)}</pre>`);
  }
  return `<section class="run-view">${pieces.join("")}</section>`;
}
