import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { DEBOUNCE_MS, MapPane, PaneDelivery } from "../src/mapview";
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

function makePane(server: FakeServer, onImage: (d: PaneDelivery) => void,
                  onError: (e: unknown) => void = () => undefined): MapPane {
  const api = new ApiClient("http://fake", server.fetch);
  return new MapPane(api, 64, 64, onImage, onError);
}

describe("MapPane", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("coalesces a burst of view changes into exactly one fetch", async () => {
    const server = new FakeServer(index);
    server.routeAll();
    const images: PaneDelivery[] = [];
    const pane = makePane(server, (d) => images.push(d));
    const view = viewFor(index.meta.base);
    pane.request(view);
    pane.request(view);
    pane.request({ ...view, params: { ...view.params, bandwidth: 300 } });
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);
    expect(pane.fetchCount).toBe(1);
    expect(images).toHaveLength(1);
    expect(new Uint8Array(images[0].mapBytes).length).toBeGreaterThan(0);
  });

  it("delivers the latest view when requests overlap (latest wins)", async () => {
    const server = new FakeServer(index);
    server.routeAll();
    const images: PaneDelivery[] = [];
    const pane = makePane(server, (d) => images.push(d));
    pane.request(viewFor(index.meta.base));
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS - 10);
    pane.request(viewFor(index.meta.low)); // supersedes before the fetch fires
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);
    expect(images).toHaveLength(1);
    expect(images[0].view.scenario).toBe(index.meta.low);
  });

  it("sequential requests refresh the layer with new bytes", async () => {
    const server = new FakeServer(index);
    server.routeAll();
    const images: PaneDelivery[] = [];
    const pane = makePane(server, (d) => images.push(d));
    await pane.requestNow(viewFor(index.meta.base));
    await pane.requestNow(viewFor(index.meta.low));
    expect(images).toHaveLength(2);
    const a = new Uint8Array(images[0].mapBytes);
    const b = new Uint8Array(images[1].mapBytes);
    expect(Buffer.from(a).equals(Buffer.from(b))).toBe(false);
  });

  it("reports fetch failures without clobbering prior state", async () => {
    const server = new FakeServer(index); // nothing routed -> 404
    const errors: unknown[] = [];
    const images: PaneDelivery[] = [];
    const pane = makePane(server, (d) => images.push(d), (e) => errors.push(e));
    await pane.requestNow(viewFor("missing"));
    expect(errors).toHaveLength(1);
    expect(images).toHaveLength(0);
  });
});
