// Single-page wiring: one (or two, when comparing) map panes over the
// service API, plus edit tools, point inspection, lineage breadcrumbs, and a
// comparison panel. All state that matters lives on the server or in the URL
// fragment; re-loading the page reconstructs the identical view.

import { ApiClient, ApiError } from "./api";
import { formatDiff } from "./compare";
import { EditQueue } from "./editqueue";
import { hitTestSegment, screenToWorld, ScreenTransform } from "./hittest";
import { buildLineage, describeEdit } from "./lineage";
import { MapPane } from "./mapview";
import type { Edit, NetworkPayload } from "./types";
import {
  clampViewport, decodeViewState, DEFAULT_PARAMS, encodeViewState, inBounds,
  validateParams, ViewState,
} from "./viewstate";

const MAP_W = 800;
const MAP_H = 600;

type Tool = "inspect" | "place-poi" | "edit-segment";

export class App {
  private api: ApiClient;
  private view!: ViewState;
  private network: NetworkPayload | null = null;
  private tool: Tool = "inspect";
  private pane: MapPane;
  private comparePane: MapPane;
  private edits: EditQueue;

  private $map: HTMLImageElement;
  private $compareMap: HTMLImageElement;
  private $banner: HTMLElement;
  private $inspect: HTMLElement;
  private $diff: HTMLElement;
  private $crumbs: HTMLElement;

  constructor(private root: Document, baseUrl: string) {
    this.api = new ApiClient(baseUrl);
    this.$map = root.getElementById("map") as HTMLImageElement;
    this.$compareMap = root.getElementById("compare-map") as HTMLImageElement;
    this.$banner = root.getElementById("banner")!;
    this.$inspect = root.getElementById("inspect")!;
    this.$diff = root.getElementById("diff")!;
    this.$crumbs = root.getElementById("crumbs")!;
    this.pane = new MapPane(this.api, MAP_W, MAP_H,
      (d) => this.showImage(this.$map, d.mapBytes),
      (e) => this.toast(e));
    this.comparePane = new MapPane(this.api, MAP_W, MAP_H,
      (d) => this.showImage(this.$compareMap, d.mapBytes),
      (e) => this.toast(e));
    this.edits = new EditQueue(
      this.api,
      () => this.view.scenario,
      (child) => this.switchScenario(child.scenario_id),
      (e) => this.toast(e));
    this.bind();
  }

  private transform(): ScreenTransform {
    return { viewport: this.view.viewport, width: MAP_W, height: MAP_H };
  }

  private showImage(el: HTMLImageElement, bytes: ArrayBuffer) {
    const blob = new Blob([bytes], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    const old = el.src;
    el.src = url;
    if (old.startsWith("blob:")) URL.revokeObjectURL(old);
  }

  private toast(err: unknown) {
    const msg = err instanceof ApiError ? `server: ${err.message}` : String(err);
    this.$banner.textContent = msg;
    this.$banner.classList.add("visible");
    setTimeout(() => this.$banner.classList.remove("visible"), 4000);
  }

  async start() {
    const listing = await this.api.listScenarios();
    if (!listing.length) {
      this.$banner.textContent = "no datasets on the server yet; upload one below";
      this.$banner.classList.add("visible");
      return;
    }
    const base = listing.find((s) => s.parent === null)!;
    const net = await this.api.getNetwork(base.scenario_id);
    const [bx0, by0, bx1, by1] = net.bbox;
    const pad = 0.05 * Math.max(bx1 - bx0, by1 - by0);
    const fallback: ViewState = {
      dataset: base.dataset_id,
      scenario: base.scenario_id,
      viewport: { minx: bx0 - pad, miny: by0 - pad, maxx: bx1 + pad, maxy: by1 + pad },
      params: { ...DEFAULT_PARAMS, ...base.params },
      compare: null,
    };
    this.view = decodeViewState(this.root.location ? this.root.location.hash : "", fallback);
    await this.switchScenario(this.view.scenario, true);
  }

  private async switchScenario(id: string, initial = false) {
    try {
      const meta = await this.api.getScenario(id);
      this.view = { ...this.view, scenario: id, dataset: meta.dataset_id };
      this.network = await this.api.getNetwork(id);
      this.syncFragment();
      await this.refreshLineage();
      if (initial) {
        await this.pane.requestNow(this.view);
      } else {
        this.pane.request(this.view);
      }
      if (this.view.compare) this.comparePane.request(
        { ...this.view, scenario: this.view.compare });
    } catch (err) {
      this.toast(err); // keep the current state on 404s
    }
  }

  private syncFragment() {
    const frag = encodeViewState(this.view);
    if (this.root.location && this.root.location.hash !== frag) {
      this.root.location.hash = frag;
    }
  }

  private async refreshLineage() {
    const all = await this.api.listScenarios();
    const lineage = buildLineage(
      all.filter((s) => s.dataset_id === this.view.dataset), this.view.scenario);
    this.$crumbs.replaceChildren();
    lineage.path.forEach((meta, i) => {
      if (i > 0) this.$crumbs.append(" › ");
      const a = this.root.createElement("button");
      a.textContent = describeEdit(meta.edit);
      a.className = meta.scenario_id === this.view.scenario ? "crumb active" : "crumb";
      a.onclick = () => void this.switchScenario(meta.scenario_id);
      this.$crumbs.append(a);
    });
  }

  private enqueueEdit(edit: Edit) {
    void this.edits.submit(edit);
  }

  private onMapClick(ev: MouseEvent) {
    if (!this.network) return;
    const rect = this.$map.getBoundingClientRect();
    const sx = ev.clientX - rect.left;
    const sy = ev.clientY - rect.top;
    const [x, y] = screenToWorld(this.transform(), sx, sy);
    if (this.tool === "place-poi") {
      if (!inBounds(x, y, this.network.bbox)) {
        this.toast(new Error("outside the dataset bounds"));
        return;
      }
      void this.enqueueEdit({ kind: "add_poi", x, y });
    } else if (this.tool === "edit-segment") {
      const seg = hitTestSegment(this.transform(), sx, sy, this.network.segments);
      if (!seg) return;
      const action = this.root.defaultView?.prompt(
        `segment ${seg.segment_id} (${seg.speed} km/h): 'block' or new speed km/h`,
        String(seg.speed));
      if (action === null || action === undefined || action === "") return; // cancel: no request
      if (action.trim() === "block") {
        void this.enqueueEdit({ kind: "block_segment", segment_id: seg.segment_id });
      } else {
        const speed = Number(action);
        if (!(speed > 0)) {
          this.toast(new Error("speed must be a positive number"));
          return;
        }
        void this.enqueueEdit({ kind: "set_speed", segment_id: seg.segment_id,
                                speed_kmh: speed });
      }
    } else {
      void this.inspect(x, y);
    }
  }

  private async inspect(x: number, y: number) {
    try {
      const q = await this.api.query(this.view.scenario, x, y);
      const rows = Object.entries(q.per_poi).map(([pid, v]) =>
        `POI ${pid}: density ${v.density.toExponential(3)}`
        + (v.access_time !== null ? `, ${v.access_time.toFixed(1)} s` : ", unreachable")
        + (v.via !== null ? ` via #${v.via}` : ""));
      this.$inspect.textContent =
        `(${x.toFixed(1)}, ${y.toFixed(1)}) dominant: `
        + (q.dominant === null ? "none" : `POI ${q.dominant}`)
        + `, value ${q.value.toExponential(3)}\n` + rows.join("\n");
    } catch (err) {
      this.toast(err);
    }
  }

  async compareWith(other: string) {
    this.view = { ...this.view, compare: other };
    this.syncFragment();
    this.comparePane.request({ ...this.view, scenario: other });
    try {
      const d = await this.api.diff(this.view.scenario, other);
      this.$diff.textContent = formatDiff(d);
    } catch (err) {
      this.toast(err);
    }
  }

  private applyParams(params: Partial<ViewState["params"]>) {
    const next = { ...this.view.params, ...params };
    const errs = validateParams(next);
    if (errs.length) {
      this.toast(new Error(errs.join("; ")));
      return;
    }
    this.view = { ...this.view, params: next };
    this.syncFragment();
    this.pane.request(this.view); // debounced: exactly one refetch per change burst
    if (this.view.compare) this.comparePane.request(
      { ...this.view, scenario: this.view.compare });
  }

  private bind() {
    this.$map.addEventListener("click", (ev) => this.onMapClick(ev as MouseEvent));
    for (const tool of ["inspect", "place-poi", "edit-segment"] as Tool[]) {
      this.root.getElementById(`tool-${tool}`)?.addEventListener("click", () => {
        this.tool = tool;
      });
    }
    const kernel = this.root.getElementById("kernel") as HTMLSelectElement | null;
    kernel?.addEventListener("change", () => this.applyParams({ kernel: kernel.value }));
    const bw = this.root.getElementById("bandwidth") as HTMLInputElement | null;
    bw?.addEventListener("change", () => this.applyParams({ bandwidth: Number(bw.value) }));
    const compareSel = this.root.getElementById("compare") as HTMLSelectElement | null;
    compareSel?.addEventListener("change", () => {
      if (compareSel.value) void this.compareWith(compareSel.value);
    });
    const upload = this.root.getElementById("upload") as HTMLInputElement | null;
    upload?.addEventListener("change", async () => {
      const file = upload.files?.[0];
      if (!file) return;
      try {
        const handle = await this.api.uploadDataset(await file.text(), file.name);
        await this.start();
        await this.switchScenario(handle.base_scenario, true);
      } catch (err) {
        this.toast(err);
      }
    });
    this.root.defaultView?.addEventListener("hashchange", () => {
      const v = decodeViewState(this.root.location!.hash, this.view);
      if (v.scenario !== this.view.scenario) void this.switchScenario(v.scenario);
    });
  }

  panBy(dx: number, dy: number) {
    if (!this.network) return;
    this.view = {
      ...this.view,
      viewport: clampViewport({
        minx: this.view.viewport.minx + dx, miny: this.view.viewport.miny + dy,
        maxx: this.view.viewport.maxx + dx, maxy: this.view.viewport.maxy + dy,
      }, this.network.bbox),
    };
    this.syncFragment();
    this.pane.request(this.view);
  }
}

export function boot() {
  const baseUrl = (window as unknown as { TOPOMAP_API?: string }).TOPOMAP_API
    ?? "http://127.0.0.1:8000";
  const app = new App(document, baseUrl);
  void app.start();
  (window as unknown as { topomapApp: App }).topomapApp = app;
}

if (typeof window !== "undefined" && typeof document !== "undefined"
    && document.getElementById("map")) {
  boot();
}
