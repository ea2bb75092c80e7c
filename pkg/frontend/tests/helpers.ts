/** Canned responses and a controllable fetch mock. */

import { FetchLike, Route, RoutesResponse } from "../src/api.js";

export function route(
  signature: string,
  rank: number,
  overrides: Partial<Route["totals"]> = {},
  score = 0,
): Route {
  const [line, stretch] = signature.split(":", 2);
  const [board, alight] = (stretch ?? "a>b").split(">", 2);
  return {
    route_id: `q:${rank}`,
    signature,
    rank,
    score,
    segments: [
      {
        line,
        mode: "Bus",
        board,
        alight,
        intermediate: [],
        distance_m: 1800,
        duration_s: 540,
        fare: 2,
      },
    ],
    totals: {
      distance_m: 1890,
      duration_s: 780,
      fare: 2,
      start_walk_m: 50,
      end_walk_m: 40,
      transfer_walk_m: 0,
      wait_s: 300,
      n_transfers: 0,
      ...overrides,
    },
    provenance: ["Distance"],
  };
}

export function response(
  signatures: string[],
  flags: string[] = [],
): RoutesResponse {
  return {
    status: "ok",
    flags,
    timings: { bind_ms: 0, routing_ms: 0, ranking_ms: 0 },
    routes: signatures.map((sig, i) => route(sig, i + 1)),
  };
}

/** Signatures of the rendered cards, in document order. */
export function cardOrder(html: string): string[] {
  return [...html.matchAll(/data-signature="([^"]+)"/g)].map((m) =>
    m[1].replace(/&gt;/g, ">").replace(/&lt;/g, "<").replace(/&amp;/g, "&"),
  );
}

export interface MockCall {
  url: string;
  resolve(status: number, body: unknown): void;
  reject(err: unknown): void;
}

/** Fetch mock that parks every call until the test releases it, which
 * lets tests resolve overlapping requests out of order. */
export function deferredFetch(): { fetch: FetchLike; calls: MockCall[] } {
  const calls: MockCall[] = [];
  const fetchImpl: FetchLike = (url) =>
    new Promise((resolvePromise, rejectPromise) => {
      calls.push({
        url,
        resolve: (status, body) =>
          resolvePromise({ status, json: () => Promise.resolve(body) }),
        reject: rejectPromise,
      });
    });
  return { fetch: fetchImpl, calls };
}

/** Fetch mock answering immediately from a queue of [status, body]. */
export function cannedFetch(replies: Array<[number, unknown]>): FetchLike {
  let i = 0;
  return (url) => {
    void url;
    const reply = replies[Math.min(i, replies.length - 1)];
    i += 1;
    return Promise.resolve({
      status: reply[0],
      json: () => Promise.resolve(reply[1]),
    });
  };
}
