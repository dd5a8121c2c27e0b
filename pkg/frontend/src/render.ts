/** Tiny HTML-string helpers shared by the views. */

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function num(value: number): string {
  return Number.isInteger(value) ? String(value) : String(Math.round(value * 1000) / 1000);
}

export function banner(kind: string, text: string): string {
  return `<div class="banner banner-${esc(kind)}" role="alert">${esc(text)}</div>`;
}

export const DISCONNECT_BANNER = banner(
  "disconnect", "Connection to the service lost; retrying…");
