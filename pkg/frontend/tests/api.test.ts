import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, renderQuery } from "../src/api";
import { FakeServer, loadIndex } from "./helpers";

const index = loadIndex();

function client(server: FakeServer): ApiClient {
  return new ApiClient("http://fake", server.fetch);
}

describe("ApiClient", () => {
  it("fetches scenario metadata", async () => {
    const server = new FakeServer(index);
    server.routeAll();
    const meta = await client(server).getScenario(index.meta.base);
    expect(meta.scenario_id).toBe(index.meta.base);
    expect(meta.parent).toBeNull();
    expect(meta.pois.length).toBe(2);
  });

  it("revalidates grids with ETags and reuses cached bytes on 304", async () => {
    const server = new FakeServer(index);
    server.routeAll();
    const api = client(server);
    const a = await api.fetchGrid(index.meta.base, index.meta.grid_query);
    const b = await api.fetchGrid(index.meta.base, index.meta.grid_query);
    expect(new Uint8Array(b)).toEqual(new Uint8Array(a));
    const statuses = server.log.map((l) => l.status);
    expect(statuses).toEqual([200, 304]);
  });

  it("maps error bodies to ApiError", async () => {
    const server = new FakeServer(index); // no routes: everything 404s
    await expect(client(server).getScenario("missing")).rejects.toThrowError(ApiError);
    await expect(client(server).getScenario("missing")).rejects.toMatchObject({
      status: 404,
    });
  });

  it("builds render queries with params", () => {
    const q = renderQuery({ minx: 0, miny: 1, maxx: 2, maxy: 3 }, 10, 20,
                          { kernel: "sigmoid", bandwidth: 120 });
    const p = new URLSearchParams(q);
    expect(p.get("minx")).toBe("0");
    expect(p.get("height")).toBe("20");
    expect(p.get("kernel")).toBe("sigmoid");
    expect(p.get("bandwidth")).toBe("120");
  });
});
