// Test harness: replays HTTP responses recorded from the real Python
// service (scripts/gen_fixtures.py) through a fetch-compatible fake, so the
// UI logic is exercised against genuine server behavior, ETags included.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api";

const FIXTURE_DIR = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

interface RecordedResponse {
  method: string;
  path: string; // includes the query string when recorded with one
  file: string;
  status: number;
  etag: string | null;
  content_type: string | null;
}

export interface FixtureIndex {
  responses: Record<string, RecordedResponse>;
  meta: {
    base: string;
    low: string;
    high: string;
    blocked: string;
    grid_query: string;
    express_segment: number;
    bbox: [number, number, number, number];
  };
}

export function loadIndex(): FixtureIndex {
  return JSON.parse(readFileSync(join(FIXTURE_DIR, "index.json"), "utf8"));
}

export function fixtureBytes(name: string): ArrayBuffer {
  const buf = readFileSync(join(FIXTURE_DIR, name));
  return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
}

interface Route {
  method: string;
  path: string; // without query
  query: URLSearchParams | null;
  bodyMatch: ((body: string) => boolean) | null;
  rec: RecordedResponse;
}

function querySubset(recorded: URLSearchParams, requested: URLSearchParams): boolean {
  for (const [k, v] of recorded.entries()) {
    if (requested.get(k) !== v) return false;
  }
  return true;
}

export class FakeServer {
  private routes: Route[] = [];
  log: { method: string; url: string; status: number }[] = [];

  constructor(private index: FixtureIndex) {}

  route(name: string, bodyMatch?: (body: string) => boolean): void {
    const rec = this.index.responses[name];
    if (!rec) throw new Error(`no recorded response named '${name}'`);
    const qpos = rec.path.indexOf("?");
    this.routes.push({
      method: rec.method,
      path: qpos < 0 ? rec.path : rec.path.slice(0, qpos),
      query: qpos < 0 ? null : new URLSearchParams(rec.path.slice(qpos + 1)),
      bodyMatch: bodyMatch ?? null,
      rec,
    });
  }

  routeAll(except: (name: string) => boolean = () => false): void {
    for (const name of Object.keys(this.index.responses)) {
      if (!except(name)) this.route(name);
    }
  }

  fetch: FetchLike = async (url, init) => {
    const method = (init?.method ?? "GET").toUpperCase();
    const u = new URL(url, "http://fake");
    const body = typeof init?.body === "string" ? init.body : "";
    for (const r of this.routes) {
      if (r.method !== method || r.path !== u.pathname) continue;
      if (r.query && !querySubset(r.query, u.searchParams)) continue;
      if (r.bodyMatch && !r.bodyMatch(body)) continue;
      const inm = init?.headers
        ? new Headers(init.headers as HeadersInit).get("if-none-match")
        : null;
      if (r.rec.etag && inm === r.rec.etag) {
        this.log.push({ method, url: String(url), status: 304 });
        return new Response(null, { status: 304 });
      }
      const headers: Record<string, string> = {};
      if (r.rec.etag) headers["ETag"] = r.rec.etag;
      if (r.rec.content_type) headers["Content-Type"] = r.rec.content_type;
      this.log.push({ method, url: String(url), status: r.rec.status });
      return new Response(fixtureBytes(r.rec.file), { status: r.rec.status, headers });
    }
    this.log.push({ method, url: String(url), status: 404 });
    return new Response(JSON.stringify({ error: `no fixture for ${method} ${u.pathname}` }),
      { status: 404, headers: { "Content-Type": "application/json" } });
  };
}
