/** HTML rendering. Pure string producers so they test without a DOM;
 * main.ts assigns the output to container elements. Every number shown
 * comes straight from a response field; the only client-side math is
 * display formatting (seconds to minutes, meters to km). */

import { Route, RoutesResponse, Station } from "./api.js";
import { UiQueryState } from "./state.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatDuration(seconds: number): string {
  const mins = Math.round(seconds / 60);
  if (mins < 60) return `${mins} min`;
  return `${Math.floor(mins / 60)} h ${mins % 60} min`;
}

export function formatDistance(meters: number): string {
  return meters < 1000 ? `${Math.round(meters)} m` : `${(meters / 1000).toFixed(1)} km`;
}

function segmentRows(route: Route): string {
  return route.segments
    .map(
      (s) => `<li class="segment">
        <span class="line ${esc(s.mode.toLowerCase())}">${esc(s.line)}</span>
        ${esc(s.board)} &rarr; ${esc(s.alight)}
        <span class="seg-stats">${formatDuration(s.duration_s)},
          ${formatDistance(s.distance_m)}, fare ${s.fare.toFixed(2)}</span>
      </li>`,
    )
    .join("\n");
}

export function renderCard(route: Route, moved: boolean): string {
  const t = route.totals;
  const walk = t.start_walk_m + t.end_walk_m + t.transfer_walk_m;
  return `<details class="card${moved ? " moved" : ""}" data-signature="${esc(route.signature)}" data-rank="${route.rank}">
  <summary>
    <span class="rank">#${route.rank}</span>
    ${moved ? '<span class="moved-mark" title="position changed">&#8645;</span>' : ""}
    <span class="eta">${formatDuration(t.duration_s)}</span>
    <span class="fare">fare ${t.fare.toFixed(2)}</span>
    <span class="transfers">${t.n_transfers} transfer${t.n_transfers === 1 ? "" : "s"}</span>
    <span class="walk">${formatDistance(walk)} walk</span>
  </summary>
  <ol class="segments">
${segmentRows(route)}
  </ol>
</details>`;
}

/** Cards strictly in response order; rank comes from the response. */
export function renderRoutes(response: RoutesResponse, moved: string[]): string {
  const movedSet = new Set(moved);
  const banner = response.flags.includes("rerank_disabled_primary_order")
    ? '<div class="banner info">primary order (model off)</div>\n'
    : "";
  const cards = response.routes
    .map((r) => renderCard(r, movedSet.has(r.signature)))
    .join("\n");
  return `${banner}<div class="route-list">\n${cards}\n</div>`;
}

const NO_ROUTE_STATUSES = new Set([
  "unreachable",
  "walk_only",
  "no_station_in_range",
  "degenerate_query",
]);

export function renderError(error: { status: string; detail: string }): string {
  if (NO_ROUTE_STATUSES.has(error.status)) {
    const hint = error.status === "walk_only" ? " (endpoints share their nearest stations; just walk)" : "";
    return `<div class="banner warn">no transit route: ${esc(error.status)}${hint}</div>`;
  }
  if (error.status === "loading" || error.status === "http_503") {
    return '<div class="banner warn">engine is still loading, retry shortly</div>';
  }
  return `<div class="banner error">request failed (${esc(error.status)}): ${esc(error.detail)}</div>`;
}

export function renderResults(state: UiQueryState): string {
  if (state.loading) return '<div class="banner info">searching&hellip;</div>';
  const parts: string[] = [];
  if (state.error) parts.push(renderError(state.error));
  if (state.response) parts.push(renderRoutes(state.response, state.movedSignatures));
  if (parts.length === 0) parts.push('<div class="banner info">pick an origin and a destination</div>');
  return parts.join("\n");
}

export function renderStationOptions(stations: Station[]): string {
  return stations
    .map(
      (s) =>
        `<option value="${s.lat},${s.lon}" data-id="${esc(s.id)}">${esc(s.name)} (${s.lines.map(esc).join(", ")})</option>`,
    )
    .join("\n");
}
