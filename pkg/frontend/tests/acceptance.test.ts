// The what-if loop of acceptance criterion 12, driven end-to-end against
// responses recorded from the real service: placing a POI refreshes the map
// layer with a new hue, blocking a segment recolors the field, and the
// comparison view reproduces the server /diff balance ordering (the oracle).

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { comparisonRow, rankPlacements } from "../src/compare";
import { EditQueue } from "../src/editqueue";
import { decodeGrid, dominantOrdinals } from "../src/grid";
import { MapPane, PaneDelivery } from "../src/mapview";
import type { DiffSummary, ScenarioMeta } from "../src/types";
import { DEFAULT_PARAMS, ViewState } from "../src/viewstate";
import { FakeServer, loadIndex } from "./helpers";

const index = loadIndex();

function viewFor(scenario: string): ViewState {
  return {
    dataset: "d0",
    scenario,
    viewport: { minx: -50, miny: -50, maxx: 450, maxy: 450 },
    params: DEFAULT_PARAMS,
    compare: null,
  };
}

function serverWithRoutes(): FakeServer {
  const server = new FakeServer(index);
  // edit POSTs share a path; dispatch on the submitted body
  server.routeAll((name) => name.startsWith("edit_"));
  server.route("edit_low",
    (body) => JSON.parse(body).kind === "add_poi" && JSON.parse(body).x === 0.0);
  server.route("edit_high",
    (body) => JSON.parse(body).kind === "add_poi" && JSON.parse(body).x === 205.0);
  server.route("edit_block",
    (body) => JSON.parse(body).kind === "block_segment");
  return server;
}

describe("acceptance 12: the interactive what-if loop", () => {
  it("place POI -> map refreshes and the new hue appears", async () => {
    const server = serverWithRoutes();
    const api = new ApiClient("http://fake", server.fetch);
    const images: PaneDelivery[] = [];
    const pane = new MapPane(api, 64, 64, (d) => images.push(d));

    let active = index.meta.base;
    await pane.requestNow(viewFor(active));
    const gridBefore = decodeGrid(await api.fetchGrid(active, index.meta.grid_query));

    const queue = new EditQueue(api, () => active, async (child: ScenarioMeta) => {
      active = child.scenario_id;
      await pane.requestNow(viewFor(active));
    });
    const child = await queue.submit({ kind: "add_poi", x: 0.0, y: 380.0, name: "low" });
    expect(child?.scenario_id).toBe(index.meta.low);

    // the map layer refreshed with different bytes
    expect(images).toHaveLength(2);
    expect(Buffer.from(images[1].mapBytes).equals(Buffer.from(images[0].mapBytes)))
      .toBe(false);

    // and the displayed field gained the new POI's hue (a new dominant ordinal)
    const gridAfter = decodeGrid(await api.fetchGrid(active, index.meta.grid_query));
    const before = dominantOrdinals(gridBefore);
    const after = dominantOrdinals(gridAfter);
    expect(before.has(2)).toBe(false);
    expect(after.has(2)).toBe(true);
  });

  it("block segment -> the field recolors", async () => {
    const server = serverWithRoutes();
    const api = new ApiClient("http://fake", server.fetch);
    let active = index.meta.low;
    const gridBefore = decodeGrid(await api.fetchGrid(active, index.meta.grid_query));

    const queue = new EditQueue(api, () => active, (child) => {
      active = child.scenario_id;
    });
    const child = await queue.submit({
      kind: "block_segment", segment_id: index.meta.express_segment,
    });
    expect(child?.scenario_id).toBe(index.meta.blocked);

    const gridAfter = decodeGrid(await api.fetchGrid(active, index.meta.grid_query));
    let changed = 0;
    for (let i = 0; i < gridBefore.dominant.length; i++) {
      if (gridBefore.dominant[i] !== gridAfter.dominant[i]) changed++;
    }
    expect(changed).toBeGreaterThan(0); // ownership recolors somewhere
  });

  it("compare view shows the balance ordering from the server oracle", async () => {
    const server = serverWithRoutes();
    const api = new ApiClient("http://fake", server.fetch);
    const dLow: DiffSummary = await api.diff(index.meta.base, index.meta.low);
    const dHigh: DiffSummary = await api.diff(index.meta.base, index.meta.high);

    // the low-density placement balances the field more (lower CoV)
    expect(dLow.balance_after).toBeLessThan(dHigh.balance_after);

    const ranked = rankPlacements([
      comparisonRow(index.meta.high, dHigh),
      comparisonRow(index.meta.low, dLow),
    ]);
    expect(ranked[0].scenario).toBe(index.meta.low);
    expect(ranked[0].balance).toBe(dLow.balance_after);
  });

  it("rapid double placement yields two sequential children (no lost update)", async () => {
    const server = new FakeServer(index);
    // first submit targets the base, second must target the first child
    server.route("edit_low", (body) => JSON.parse(body).kind === "add_poi");
    server.route("edit_block");
    const api = new ApiClient("http://fake", server.fetch);

    let active = index.meta.base;
    const parents: string[] = [];
    const queue = new EditQueue(api, () => {
      parents.push(active);
      return active;
    }, (child) => {
      active = child.scenario_id;
    });
    const p1 = queue.submit({ kind: "add_poi", x: 0.0, y: 380.0 });
    const p2 = queue.submit({ kind: "block_segment",
                              segment_id: index.meta.express_segment });
    const [c1, c2] = await Promise.all([p1, p2]);
    expect(c1?.scenario_id).toBe(index.meta.low);
    expect(c2?.scenario_id).toBe(index.meta.blocked);
    expect(parents).toEqual([index.meta.base, index.meta.low]);
  });
});
