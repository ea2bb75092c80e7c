import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { cannedFetch, response } from "./helpers.js";

describe("ApiClient", () => {
  it("builds route URLs with optional context", async () => {
    const urls: string[] = [];
    const client = new ApiClient("http://x", (url) => {
      urls.push(url);
      return Promise.resolve({ status: 200, json: () => Promise.resolve(response([])) });
    });
    await client.routes("1,2", "3,4");
    await client.routes("1,2", "3,4", 1772445600, "Snow");
    expect(urls[0]).toBe("http://x/v1/routes?o=1%2C2&d=3%2C4");
    expect(urls[1]).toBe("http://x/v1/routes?o=1%2C2&d=3%2C4&t=1772445600&weather=Snow");
  });

  it("maps engine 404 bodies to their status", async () => {
    const client = new ApiClient(
      "",
      cannedFetch([[404, { status: "unreachable", flags: [], routes: [] }]]),
    );
    const err = await client.routes("1,2", "3,4").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.httpStatus).toBe(404);
    expect(err.engineStatus).toBe("unreachable");
  });

  it("maps 400 and 503 replies", async () => {
    const client = new ApiClient(
      "",
      cannedFetch([
        [400, { detail: "invalid o: 'garbage'" }],
        [503, { status: "loading" }],
      ]),
    );
    const bad = await client.routes("garbage", "3,4").catch((e) => e as ApiError);
    expect(bad.engineStatus).toBe("http_400");
    expect(bad.message).toContain("invalid o");
    const loading = await client.health().catch((e) => e as ApiError);
    expect(loading.engineStatus).toBe("loading");
  });

  it("wraps network failures", async () => {
    const client = new ApiClient("", () => Promise.reject(new Error("refused")));
    const err = await client.health().catch((e) => e as ApiError);
    expect(err.engineStatus).toBe("network_error");
  });

  it("unwraps the stations list", async () => {
    const stations = [{ id: "p1", name: "P1", lat: 1, lon: 2, lines: ["L1"] }];
    const client = new ApiClient("", cannedFetch([[200, { stations }]]));
    expect(await client.stations("0,0,9,9")).toEqual(stations);
  });
});
