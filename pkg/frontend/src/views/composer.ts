/**
 * Intent composer: a form model that builds a schema-valid document and
 * refuses to submit while the client-side mirror of the gateway rules
 * reports errors.  The error shown next to a field uses exactly the
 * field path the gateway would return.
 */

import { esc } from "../render";
import { validateIntentDocument } from "../validate";
import type { ErrorTriple, IntentDoc, TaskRequestDoc } from "../types";

export interface TaskRow {
  task_key: string;
  task_type: string;
  depends_on: string;   // comma-separated, as typed
  input_data: string;
}

export interface ComposerState {
  intent_id: string;
  goal: string;
  latency_budget_ms: string;   // raw field text; empty means "not a number"
  utilization_budget: string;
  combination_count: string;
  tasks: TaskRow[];
}

export function emptyComposer(): ComposerState {
  return {
    intent_id: "",
    goal: "",
    latency_budget_ms: "",
    utilization_budget: "",
    combination_count: "1",
    tasks: [],
  };
}

function splitList(raw: string): string[] {
  return raw.split(",").map((part) => part.trim()).filter((part) => part);
}

function parseNumberField(raw: string): number | string {
  if (!raw.trim()) return raw;
  const value = Number(raw);
  return Number.isFinite(value) ? value : raw;
}

/** Build the document the form would submit.  Unparseable numeric fields
 * stay strings so validation reports them with the right path. */
export function buildDocument(state: ComposerState): Record<string, unknown> {
  const doc: Record<string, unknown> = { schema_version: "1" };
  if (state.intent_id.trim()) doc.intent_id = state.intent_id.trim();
  if (state.goal.trim()) doc.goal = state.goal.trim();
  doc.task_requests = state.tasks.map((row): TaskRequestDoc => ({
    task_key: row.task_key.trim(),
    task_type: row.task_type.trim(),
    depends_on: splitList(row.depends_on),
    input_data: splitList(row.input_data),
  }));
  doc.latency_budget_ms = parseNumberField(state.latency_budget_ms);
  doc.utilization_budget = parseNumberField(state.utilization_budget);
  const count = parseNumberField(state.combination_count);
  doc.combination_count = count;
  return doc;
}

export interface ComposerReview {
  document: Record<string, unknown>;
  errors: ErrorTriple[];
  submittable: boolean;
}

export function reviewComposer(state: ComposerState): ComposerReview {
  const document = buildDocument(state);
  const errors = validateIntentDocument(document);
  const submittable = state.tasks.length > 0 && errors.length === 0;
  return { document, errors, submittable };
}

function errorsFor(errors: ErrorTriple[], path: string): ErrorTriple[] {
  return errors.filter((e) => e.field_path === path
    || (e.field_path ?? "").startsWith(`${path}.`)
    || (e.field_path ?? "").startsWith(`${path}[`));
}

function inlineError(errors: ErrorTriple[], path: string): string {
  const matches = errorsFor(errors, path);
  if (!matches.length) return "";
  const first = matches[0]!;
  return `<span class="field-error" data-path="${esc(first.field_path)}">`
    + `${esc(first.field_path)}: ${esc(first.message)}</span>`;
}

function field(label: string, name: string, value: string,
               errors: ErrorTriple[], placeholder = ""): string {
  return `<label class="field">${esc(label)}`
    + `<input name="${esc(name)}" value="${esc(value)}" `
    + `placeholder="${esc(placeholder)}">`
    + inlineError(errors, name)
    + `</label>`;
}

export function renderComposer(state: ComposerState,
                               review: ComposerReview): string {
  const taskRows = state.tasks.map((row, index) => {
    const path = `task_requests[${index}]`;
    return `<fieldset class="task-row" data-index="${index}">`
      + `<legend>task ${index + 1}</legend>`
      + `<input name="task_key" data-index="${index}" `
      + `placeholder="task_key" value="${esc(row.task_key)}">`
      + `<input name="task_type" data-index="${index}" `
      + `placeholder="task_type" value="${esc(row.task_type)}">`
      + `<input name="depends_on" data-index="${index}" `
      + `placeholder="depends_on (comma separated)" value="${esc(row.depends_on)}">`
      + `<input name="input_data" data-index="${index}" `
      + `placeholder="input_data (comma separated)" value="${esc(row.input_data)}">`
      + `<button type="button" class="remove-task" data-index="${index}">×</button>`
      + inlineError(review.errors, path)
      + `</fieldset>`;
  }).join("");

  const disabled = review.submittable ? "" : " disabled";
  return `<section class="composer">`
    + `<h2>Compose intent</h2>`
    + `<form id="composer-form">`
    + field("intent_id (optional)", "intent_id", state.intent_id, review.errors)
    + field("goal", "goal", state.goal, review.errors)
    + `<div class="tasks">${taskRows}</div>`
    + inlineError(review.errors, "task_requests")
    + `<button type="button" id="add-task">add task</button>`
    + field("latency_budget_ms", "latency_budget_ms",
            state.latency_budget_ms, review.errors, "e.g. 100")
    + field("utilization_budget", "utilization_budget",
            state.utilization_budget, review.errors, "0.0 – 1.0")
    + field("combination_count", "combination_count",
            state.combination_count, review.errors, "k")
    + `<button type="submit" id="submit-intent"${disabled}>submit</button>`
    + `</form>`
    + `</section>`;
}
