/**
 * Console entry point: a small hash-routed single-page client over the
 * service API.  Views render HTML strings into #app; run views poll until
 * a terminal phase; the chat view refreshes its transcript after each turn.
 */

import { ApiClient, ApiError, ConnectionLost } from "./api";
import { RunPoller } from "./poller";
import { esc, banner } from "./render";
import {
  emptyComposer,
  renderComposer,
  reviewComposer,
  type ComposerState,
} from "./views/composer";
import { renderChat, type ChatViewState } from "./views/chat";
import { renderRunView } from "./views/runview";
import { TERMINAL_PHASES, type RunListEntry } from "./types";

const api = new ApiClient();
const app = () => document.getElementById("app")!;

let activePoller: RunPoller | null = null;
let chatTimer: ReturnType<typeof setTimeout> | null = null;

function teardown(): void {
  if (activePoller) {
    activePoller.stop();
    activePoller = null;
  }
  if (chatTimer !== null) {
    clearTimeout(chatTimer);
    chatTimer = null;
  }
}

function nav(): string {
  return `<nav>`
    + `<a href="#/">runs</a> `
    + `<a href="#/composer">compose intent</a> `
    + `<a href="#/chat">chat session</a>`
    + `</nav>`;
}

// -- runs list ----------------------------------------------------------------

function renderRunList(runs: RunListEntry[]): string {
  if (!runs.length) {
    return `<p class="empty">No runs yet. Compose an intent or start a chat.</p>`;
  }
  const rows = [...runs].reverse().map((run) =>
    `<tr><td><a href="#/runs/${esc(run.run_id)}">${esc(run.run_id)}</a></td>`
    + `<td><span class="phase phase-${esc(run.phase)}">${esc(run.phase)}</span></td>`
    + `<td>${esc(run.source)}</td></tr>`).join("");
  return `<table class="run-list">`
    + `<thead><tr><th>run</th><th>phase</th><th>source</th></tr></thead>`
    + `<tbody>${rows}</tbody></table>`;
}

async function showHome(): Promise<void> {
  try {
    const { runs } = await api.listRuns();
    app().innerHTML = nav() + `<h2>Runs</h2>` + renderRunList(runs);
    const hasLive = runs.some((run) => !TERMINAL_PHASES.has(run.phase));
    if (hasLive && location.hash.replace("#", "") in {"": 1, "/": 1}) {
      chatTimer = setTimeout(() => void showHome(), 1000);
    }
  } catch (error) {
    app().innerHTML = nav()
      + banner("disconnect", "Connection to the service lost; retrying…");
    chatTimer = setTimeout(() => void showHome(), 2000);
  }
}

// -- composer -------------------------------------------------------------------

const composerState: ComposerState = emptyComposer();

function bindComposer(): void {
  const review = reviewComposer(composerState);
  app().innerHTML = nav() + renderComposer(composerState, review);
  const form = document.getElementById("composer-form")!;

  form.querySelectorAll("input").forEach((input) => {
    input.addEventListener("change", () => {
      const element = input as HTMLInputElement;
      const index = element.dataset.index;
      if (index === undefined) {
        (composerState as unknown as Record<string, string>)[element.name] =
          element.value;
      } else {
        const row = composerState.tasks[Number(index)];
        if (row) {
          (row as unknown as Record<string, string>)[element.name] =
            element.value;
        }
      }
      bindComposer();
    });
  });
  document.getElementById("add-task")!.addEventListener("click", () => {
    composerState.tasks.push(
      { task_key: "", task_type: "", depends_on: "", input_data: "" });
    bindComposer();
  });
  form.querySelectorAll(".remove-task").forEach((button) => {
    button.addEventListener("click", () => {
      const index = Number((button as HTMLElement).dataset.index);
      composerState.tasks.splice(index, 1);
      bindComposer();
    });
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitComposer();
  });
}

async function submitComposer(): Promise<void> {
  const review = reviewComposer(composerState);
  if (!review.submittable) return;
  try {
    const { run_id } = await api.submitIntent(JSON.stringify(review.document));
    location.hash = `#/runs/${run_id}`;
  } catch (error) {
    const message = error instanceof ApiError
      ? `${error.triple.error_kind} at ${error.triple.field_path}: `
        + error.triple.message
      : "Connection to the service lost; retrying…";
    const kind = error instanceof ConnectionLost ? "disconnect" : "error";
    app().insertAdjacentHTML("afterbegin", banner(kind, message));
  }
}

// -- chat -----------------------------------------------------------------------

const chatState: ChatViewState & { sessionId: string | null } = {
  session: null, disconnected: false, pending: false, sessionId: null,
};

async function showChat(): Promise<void> {
  if (!chatState.sessionId) {
    try {
      chatState.sessionId = (await api.openSession()).session_id;
    } catch {
      app().innerHTML = nav()
        + banner("disconnect", "Connection to the service lost; retrying…");
      chatTimer = setTimeout(() => void showChat(), 2000);
      return;
    }
  }
  await refreshChat();
}

async function refreshChat(): Promise<void> {
  try {
    chatState.session = await api.getSession(chatState.sessionId!);
    chatState.disconnected = false;
  } catch (error) {
    chatState.disconnected = error instanceof ConnectionLost;
  }
  bindChat();
}

function bindChat(): void {
  app().innerHTML = nav() + renderChat(chatState);
  const form = document.getElementById("chat-form");
  if (!form) return;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = document.getElementById("chat-input") as HTMLInputElement;
    const text = input.value.trim();
    if (text) void sendChat(text);
  });
}

async function sendChat(text: string): Promise<void> {
  chatState.pending = true;
  bindChat();
  try {
    const { run_id } = await api.sendUtterance(chatState.sessionId!, text);
    await waitForRun(run_id);
  } catch (error) {
    chatState.disconnected = error instanceof ConnectionLost;
  } finally {
    chatState.pending = false;
    await refreshChat();
  }
}

function waitForRun(runId: string): Promise<void> {
  return new Promise((resolve) => {
    const poller = new RunPoller(api, runId, (state) => {
      if (state.terminal) resolve();
    });
    activePoller = poller;
    poller.start();
  });
}

// -- router ----------------------------------------------------------------------

function route(): void {
  teardown();
  const hash = location.hash.replace(/^#/, "") || "/";
  const runMatch = hash.match(/^\/runs\/(.+)$/);
  if (runMatch) {
    const runId = decodeURIComponent(runMatch[1]!);
    activePoller = new RunPoller(api, runId, (state) => {
      app().innerHTML = nav() + renderRunView(state);
    });
    activePoller.start();
    return;
  }
  if (hash.startsWith("/composer")) {
    bindComposer();
    return;
  }
  if (hash.startsWith("/chat")) {
    void showChat();
    return;
  }
  void showHome();
}

window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", route);
