/** Query state and the request lifecycle.
 *
 * The controller owns a monotonically increasing request sequence number;
 * a response is applied only if it answers the newest request, so two
 * rapid submissions always render the latest one regardless of network
 * ordering (last-write-wins). There is no client-side ranking of any
 * kind: the rendered order is the response order.
 */

import { ApiClient, ApiError, Route, RoutesResponse } from "./api.js";

export interface Endpoint {
  /** "lat,lon" as sent to the API. */
  coord: string;
  /** Station id when picked from the list, for display only. */
  stationId?: string;
}

export interface UiQueryState {
  origin: Endpoint | null;
  destination: Endpoint | null;
  departEpoch?: number;
  weather?: string;
  loading: boolean;
  /** Last successful response, kept across failed re-queries. */
  response: RoutesResponse | null;
  /** Engine status of the last failure ("unreachable", "http_503", ...). */
  error: { status: string; detail: string } | null;
  /** Signatures whose position changed versus the previous render. */
  movedSignatures: string[];
}

export function initialState(): UiQueryState {
  return {
    origin: null,
    destination: null,
    loading: false,
    response: null,
    error: null,
    movedSignatures: [],
  };
}

/** Signatures that sit at a different index than in the previous order;
 * new signatures count as moved, disappeared ones are simply gone. */
export function movedCards(previous: Route[], current: Route[]): string[] {
  const before = new Map(previous.map((r, i) => [r.signature, i]));
  return current
    .filter((r, i) => before.get(r.signature) !== i)
    .map((r) => r.signature);
}

export class QueryController {
  private seq = 0;
  private appliedSeq = 0;

  constructor(
    private readonly api: ApiClient,
    readonly state: UiQueryState = initialState(),
    private readonly onChange: (s: UiQueryState) => void = () => {},
  ) {}

  /** Both endpoints set and no request outstanding beyond them. */
  get ready(): boolean {
    return this.state.origin !== null && this.state.destination !== null;
  }

  setOrigin(ep: Endpoint | null): void {
    this.state.origin = ep;
    this.onChange(this.state);
  }

  setDestination(ep: Endpoint | null): void {
    this.state.destination = ep;
    this.onChange(this.state);
  }

  setContext(departEpoch?: number, weather?: string): void {
    this.state.departEpoch = departEpoch;
    this.state.weather = weather;
    this.onChange(this.state);
  }

  /** Issue the query; resolves to whether this response was rendered
   * (false when a newer submission superseded it). */
  async submit(): Promise<boolean> {
    if (!this.ready) {
      throw new Error("both endpoints must be set before submitting");
    }
    const mySeq = ++this.seq;
    this.state.loading = true;
    this.state.error = null;
    this.onChange(this.state);
    let response: RoutesResponse | null = null;
    let error: { status: string; detail: string } | null = null;
    try {
      response = await this.api.routes(
        this.state.origin!.coord,
        this.state.destination!.coord,
        this.state.departEpoch,
        this.state.weather,
      );
    } catch (err) {
      if (err instanceof ApiError) {
        error = { status: err.engineStatus, detail: err.message };
      } else {
        error = { status: "client_error", detail: String(err) };
      }
    }
    if (mySeq < this.seq || mySeq <= this.appliedSeq) {
      return false; // superseded while in flight: discard silently
    }
    this.appliedSeq = mySeq;
    this.state.loading = false;
    if (response !== null) {
      const previous = this.state.response?.routes ?? [];
      // no marks on the very first result: there is nothing it moved from
      this.state.movedSignatures =
        previous.length > 0 ? movedCards(previous, response.routes) : [];
      this.state.response = response;
      this.state.error = null;
    } else {
      // keep the previous result list so the form and context survive
      this.state.error = error;
      this.state.movedSignatures = [];
    }
    this.onChange(this.state);
    return true;
  }

  /** Change time and/or weather and re-query (requires a prior result). */
  async replayContext(departEpoch?: number, weather?: string): Promise<boolean> {
    if (this.state.response === null) {
      throw new Error("context replay requires a prior successful query");
    }
    this.setContext(departEpoch, weather);
    return this.submit();
  }
}
