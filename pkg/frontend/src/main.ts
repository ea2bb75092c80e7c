/** Wiring: form controls on the left, ranked results on the right.
 * Endpoints come from the station dropdowns (filled from /v1/stations)
 * or free lat,lon entry; time and weather changes re-query immediately. */

import { ApiClient } from "./api.js";
import { renderResults, renderStationOptions } from "./render.js";
import { QueryController } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export async function start(base = ""): Promise<QueryController> {
  const api = new ApiClient(base);
  const results = el<HTMLDivElement>("results");
  const controller = new QueryController(api, undefined, (state) => {
    results.innerHTML = renderResults(state);
  });

  const health = await api.health().catch(() => null);
  el<HTMLSpanElement>("health").textContent = health
    ? `${health.city}: ${health.stations} stations, ${health.lines} lines, ` +
      `${health.kernel} kernel, rerank ${health.rerank}`
    : "engine unavailable";

  if (health) {
    const stations = await api.stations("-90,-180,90,180").catch(() => []);
    const options = renderStationOptions(stations);
    el<HTMLSelectElement>("origin-station").innerHTML =
      '<option value="">(type coordinates)</option>' + options;
    el<HTMLSelectElement>("dest-station").innerHTML =
      '<option value="">(type coordinates)</option>' + options;
  }

  const endpoint = (selectId: string, freeId: string) => {
    const picked = el<HTMLSelectElement>(selectId).value;
    const free = el<HTMLInputElement>(freeId).value.trim();
    const coord = picked || free;
    return coord ? { coord } : null;
  };

  const readForm = () => {
    controller.setOrigin(endpoint("origin-station", "origin-coord"));
    controller.setDestination(endpoint("dest-station", "dest-coord"));
    const when = el<HTMLInputElement>("depart").value;
    const weather = el<HTMLSelectElement>("weather").value || undefined;
    const depart = when ? Math.floor(new Date(when).getTime() / 1000) : undefined;
    controller.setContext(depart, weather);
  };

  el<HTMLFormElement>("query-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    readForm();
    if (controller.ready) void controller.submit();
  });
  for (const id of ["depart", "weather"]) {
    el<HTMLElement>(id).addEventListener("change", () => {
      readForm();
      if (controller.ready && controller.state.response) void controller.submit();
    });
  }
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("query-form")) {
  void start();
}
