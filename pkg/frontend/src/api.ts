/** Typed client for the engine's HTTP API. All knowledge of URLs and
 * response shapes lives here; the rest of the client never touches fetch
 * directly, which keeps it testable against a canned-response mock. */

export interface RouteSegment {
  line: string;
  mode: string;
  board: string;
  alight: string;
  intermediate: string[];
  distance_m: number;
  duration_s: number;
  fare: number;
}

export interface RouteTotals {
  distance_m: number;
  duration_s: number;
  fare: number;
  start_walk_m: number;
  end_walk_m: number;
  transfer_walk_m: number;
  wait_s: number;
  n_transfers: number;
}

export interface Route {
  route_id: string;
  signature: string;
  rank: number;
  score: number;
  segments: RouteSegment[];
  totals: RouteTotals;
  provenance: string[];
}

export interface RoutesResponse {
  status: string;
  flags: string[];
  timings: Record<string, number>;
  routes: Route[];
}

export interface Station {
  id: string;
  name: string;
  lat: number;
  lon: number;
  lines: string[];
}

export interface Health {
  status: string;
  city: string;
  stations: number;
  lines: number;
  kernel: string;
  rerank: string;
}

/** Error replies (400/404/503) still carry a JSON body when the engine
 * produced them; `status` distinguishes e.g. unreachable from bad input. */
export class ApiError extends Error {
  constructor(
    readonly httpStatus: number,
    readonly engineStatus: string,
    detail: string,
  ) {
    super(detail);
  }
}

export type FetchLike = (url: string) => Promise<{
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(path: string): Promise<T> {
    let resp;
    try {
      resp = await this.fetchImpl(this.base + path);
    } catch (err) {
      throw new ApiError(0, "network_error", String(err));
    }
    let body: Record<string, unknown> = {};
    try {
      body = (await resp.json()) as Record<string, unknown>;
    } catch {
      /* non-JSON error body; fall through with the HTTP status only */
    }
    if (resp.status >= 400) {
      const status = typeof body.status === "string" ? body.status : `http_${resp.status}`;
      const detail = typeof body.detail === "string" ? body.detail : status;
      throw new ApiError(resp.status, status, detail);
    }
    return body as T;
  }

  health(): Promise<Health> {
    return this.get<Health>("/v1/health");
  }

  routes(
    o: string,
    d: string,
    departEpoch?: number,
    weather?: string,
  ): Promise<RoutesResponse> {
    const params = new URLSearchParams({ o, d });
    if (departEpoch !== undefined) params.set("t", String(departEpoch));
    if (weather) params.set("weather", weather);
    return this.get<RoutesResponse>(`/v1/routes?${params.toString()}`);
  }

  async stations(bbox: string): Promise<Station[]> {
    const body = await this.get<{ stations: Station[] }>(
      `/v1/stations?bbox=${encodeURIComponent(bbox)}`,
    );
    return body.stations;
  }
}
