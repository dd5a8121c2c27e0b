/**
 * Session chat: the transcript in server order.  User turns are plain
 * bubbles; each system turn is the run's formatted summary, so the next
 * message can reference "the previous result" meaningfully.
 */

import { esc, DISCONNECT_BANNER } from "../render";
import type { SessionPayload } from "../types";

export function renderTranscript(session: SessionPayload): string {
  if (!session.chat_log.length) {
    return `<p class="empty">No messages yet; ask for something.</p>`;
  }
  return session.chat_log.map((entry) => {
    if (entry.role === "user") {
      return `<div class="turn turn-user">${esc(entry.text)}</div>`;
    }
    return `<div class="turn turn-system"><pre class="run-card">`
      + `${esc(entry.text)}</pre></div>`;
  }).join("");
}

export interface ChatViewState {
  session: SessionPayload | null;
  disconnected: boolean;
  pending: boolean;
}

export function renderChat(state: ChatViewState): string {
  const pieces: string[] = [`<section class="chat">`];
  if (state.disconnected) pieces.push(DISCONNECT_BANNER);
  if (!state.session) {
    pieces.push(`<p class="empty">Opening session…</p></section>`);
    return pieces.join("");
  }
  pieces.push(`<h2>Session <code>${esc(state.session.session_id)}</code></h2>`);
  pieces.push(`<div class="transcript">${renderTranscript(state.session)}</div>`);
  const disabled = state.pending ? " disabled" : "";
  pieces.push(
    `<form id="chat-form">`
    + `<input id="chat-input" placeholder="e.g. measure the link, then allocate"`
    + `${disabled}>`
    + `<button type="submit" id="chat-send"${disabled}>send</button>`
    + `</form>`);
  if (state.session.last_run_id) {
    pieces.push(`<p class="hint">last run: `
      + `<a href="#/runs/${esc(state.session.last_run_id)}">`
      + `${esc(state.session.last_run_id)}</a></p>`);
  }
  pieces.push(`</section>`);
  return pieces.join("");
}
