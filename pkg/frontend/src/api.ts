// Thin typed client over the graph API. The fetch implementation is
// injectable so tests can run without a server.

import type {
  BillResponse,
  ClusterResponse,
  FilterResponse,
  FilterSpecDto,
  GraphResponse,
  LayoutSnapshot,
  SearchHit,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

export interface GraphResult {
  body: GraphResponse;
  etag: string | null;
}

async function fail(response: Response): Promise<never> {
  let detail = response.statusText || `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (input, init) => fetch(input, init)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, payload?: unknown): Promise<T> {
    const init: RequestInit = { method: "POST" };
    if (payload !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(payload);
    }
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  /** Graph body plus its ETag so callers can skip unchanged re-renders. */
  async graph(view?: string): Promise<GraphResult> {
    const query = view ? `?view=${encodeURIComponent(view)}` : "";
    const response = await this.fetchFn(`${this.base}/api/graph${query}`);
    if (!response.ok) await fail(response);
    return {
      body: (await response.json()) as GraphResponse,
      etag: response.headers.get("etag"),
    };
  }

  layout(view?: string): Promise<LayoutSnapshot> {
    const query = view ? `?view=${encodeURIComponent(view)}` : "";
    return this.getJson(`/api/layout${query}`);
  }

  pin(nodeId: string): Promise<LayoutSnapshot> {
    return this.postJson(`/api/node/${encodeURIComponent(nodeId)}/pin`);
  }

  unpin(nodeId: string): Promise<LayoutSnapshot> {
    return this.postJson(`/api/node/${encodeURIComponent(nodeId)}/unpin`);
  }

  collapse(clusterId: string): Promise<ClusterResponse> {
    return this.postJson(`/api/cluster/${encodeURIComponent(clusterId)}/collapse`);
  }

  expand(clusterId: string): Promise<ClusterResponse> {
    return this.postJson(`/api/cluster/${encodeURIComponent(clusterId)}/expand`);
  }

  search(query: string, mode: "keyword" | "semantic" = "keyword", k = 10): Promise<SearchHit[]> {
    const params = new URLSearchParams({ q: query, mode, k: String(k) });
    return this.getJson(`/api/search?${params}`);
  }

  bill(billId: string): Promise<BillResponse> {
    return this.getJson(`/api/bills/${encodeURIComponent(billId)}`);
  }

  createFilterView(spec: FilterSpecDto): Promise<FilterResponse> {
    return this.postJson(`/api/filter`, spec);
  }
}

/** Deep-link URL for a resolved bill: the document plus a page anchor. */
export function billHref(bill: BillResponse): string {
  return `${bill.uri}#page=${bill.page}`;
}
