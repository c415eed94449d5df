// Typed client for the topomap HTTP service. All server mutations go through
// postEdit; map/grid responses are ETag-cached so pan-backs and F5 reloads
// reuse validated bytes.

import type {
  DatasetHandle, DiffSummary, Edit, FieldParams, NetworkPayload, QueryResult,
  ScenarioMeta, ViewportBox,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

interface CachedBody {
  etag: string;
  body: ArrayBuffer;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function errorOf(res: Response): Promise<ApiError> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") detail = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, detail);
}

export function renderQuery(view: ViewportBox, width: number, height: number,
                            params?: Partial<FieldParams>): string {
  const q = new URLSearchParams({
    minx: String(view.minx), miny: String(view.miny),
    maxx: String(view.maxx), maxy: String(view.maxy),
    width: String(width), height: String(height),
  });
  for (const [k, v] of Object.entries(params ?? {})) {
    if (v !== undefined && v !== null) q.set(k, String(v));
  }
  return q.toString();
}

export class ApiClient {
  private cache = new Map<string, CachedBody>();

  constructor(private baseUrl: string, private fetchFn: FetchLike = fetch) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) throw await errorOf(res);
    return (await res.json()) as T;
  }

  // conditional GET returning cached bytes on 304
  async bytes(path: string): Promise<ArrayBuffer> {
    const cached = this.cache.get(path);
    const headers: Record<string, string> = {};
    if (cached) headers["If-None-Match"] = cached.etag;
    const res = await this.fetchFn(this.baseUrl + path, { headers });
    if (res.status === 304 && cached) return cached.body;
    if (!res.ok) throw await errorOf(res);
    const body = await res.arrayBuffer();
    const etag = res.headers.get("etag");
    if (etag) this.cache.set(path, { etag, body });
    return body;
  }

  uploadDataset(text: string, name?: string): Promise<DatasetHandle> {
    const q = name ? `?name=${encodeURIComponent(name)}` : "";
    return this.json(`/datasets${q}`, { method: "POST", body: text });
  }

  listScenarios(): Promise<ScenarioMeta[]> {
    return this.json("/scenarios");
  }

  getScenario(id: string): Promise<ScenarioMeta> {
    return this.json(`/scenarios/${id}`);
  }

  getNetwork(id: string): Promise<NetworkPayload> {
    return this.json(`/scenarios/${id}/network`);
  }

  postEdit(id: string, edit: Edit): Promise<ScenarioMeta> {
    return this.json(`/scenarios/${id}/edits`, {
      method: "POST",
      body: JSON.stringify(edit),
    });
  }

  query(id: string, x: number, y: number): Promise<QueryResult> {
    return this.json(`/scenarios/${id}/query?x=${x}&y=${y}`);
  }

  diff(a: string, b: string): Promise<DiffSummary> {
    return this.json(`/scenarios/${a}/diff/${b}`);
  }

  mapPath(id: string, q: string): string {
    return `/scenarios/${id}/map?${q}`;
  }

  gridPath(id: string, q: string): string {
    return `/scenarios/${id}/grid?${q}`;
  }

  fetchMap(id: string, q: string): Promise<ArrayBuffer> {
    return this.bytes(this.mapPath(id, q));
  }

  fetchGrid(id: string, q: string): Promise<ArrayBuffer> {
    return this.bytes(this.gridPath(id, q));
  }
}
