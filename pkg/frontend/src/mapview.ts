// Map pane fetch loop: debounced requests (150 ms), at most one in flight,
// latest-wins cancellation. The pane never recomputes densities client-side;
// it only displays server bytes.

import { ApiClient, renderQuery } from "./api";
import type { ViewState } from "./viewstate";

export const DEBOUNCE_MS = 150;

export interface PaneDelivery {
  view: ViewState;
  mapBytes: ArrayBuffer;
  path: string;
}

type Scheduler = (fn: () => void, ms: number) => unknown;

export class MapPane {
  private seq = 0;
  private delivered = -1;
  private timer: unknown = null;
  private inflight: Promise<void> | null = null;
  private pending: ViewState | null = null;
  fetchCount = 0;

  constructor(
    private api: ApiClient,
    private width: number,
    private height: number,
    private onImage: (d: PaneDelivery) => void,
    private onError: (err: unknown) => void = () => undefined,
    private schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private cancel: (t: unknown) => void = (t) => clearTimeout(t as number),
  ) {}

  // public entry: coalesces bursts of view changes into one request
  request(view: ViewState): void {
    this.pending = view;
    if (this.timer !== null) this.cancel(this.timer);
    this.timer = this.schedule(() => {
      this.timer = null;
      void this.fire();
    }, DEBOUNCE_MS);
  }

  // immediate fetch (initial load, explicit refresh)
  requestNow(view: ViewState): Promise<void> {
    this.pending = view;
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
    return this.fire();
  }

  private async fire(): Promise<void> {
    if (this.inflight) return this.inflight; // the running fetch re-checks pending
    const run = async () => {
      while (this.pending) {
        const view = this.pending;
        this.pending = null;
        const token = ++this.seq;
        const q = renderQuery(view.viewport, this.width, this.height, view.params);
        const path = this.api.mapPath(view.scenario, q);
        try {
          this.fetchCount += 1;
          const bytes = await this.api.fetchMap(view.scenario, q);
          if (token > this.delivered && this.pending === null) {
            this.delivered = token;
            this.onImage({ view, mapBytes: bytes, path });
          }
        } catch (err) {
          if (this.pending === null) this.onError(err);
        }
      }
    };
    this.inflight = run().finally(() => {
      this.inflight = null;
    });
    return this.inflight;
  }
}
