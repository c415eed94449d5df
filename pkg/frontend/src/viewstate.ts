// Client view state: active dataset/scenario, viewport in dataset meters,
// render params, optional comparison scenario. Serializes into the URL
// fragment so links (and F5) reconstruct the exact view from server state.

import type { FieldParams, ViewportBox } from "./types";

export interface ViewState {
  dataset: string;
  scenario: string;
  viewport: ViewportBox;
  params: FieldParams;
  compare: string | null;
}

export const KERNELS = ["gaussian", "sigmoid", "parabolic", "negexp"] as const;
export const MODES = ["amplitude-decay", "eq4-literal"] as const;
export const AGGREGATES = ["max", "sum"] as const;

export const DEFAULT_PARAMS: FieldParams = {
  kernel: "gaussian",
  bandwidth: 300,
  alpha: 1,
  walk_speed: 1.4,
  mode: "amplitude-decay",
  aggregate: "max",
  cutoff_multiple: 3,
  acc_bandwidth: 0.003,
};

export function validateParams(p: FieldParams): string[] {
  const errs: string[] = [];
  if (!KERNELS.includes(p.kernel as never)) errs.push(`unknown kernel '${p.kernel}'`);
  if (!MODES.includes(p.mode as never)) errs.push(`unknown mode '${p.mode}'`);
  if (!AGGREGATES.includes(p.aggregate as never)) errs.push(`unknown aggregate '${p.aggregate}'`);
  if (!(p.bandwidth > 0)) errs.push("bandwidth must be positive");
  if (!(p.walk_speed > 0)) errs.push("walk speed must be positive");
  if (!(p.alpha > 0)) errs.push("alpha must be positive");
  if (!(p.cutoff_multiple >= 1)) errs.push("cutoff multiple must be >= 1");
  if (!(p.acc_bandwidth > 0)) errs.push("accessibility bandwidth must be positive");
  return errs;
}

// the viewport may wander at most 20% of the bbox extent beyond the dataset
export function clampViewport(vp: ViewportBox, bbox: [number, number, number, number],
                              slack = 0.2): ViewportBox {
  const [bx0, by0, bx1, by1] = bbox;
  const sx = (bx1 - bx0) * slack;
  const sy = (by1 - by0) * slack;
  const w = Math.min(vp.maxx - vp.minx, bx1 - bx0 + 2 * sx);
  const h = Math.min(vp.maxy - vp.miny, by1 - by0 + 2 * sy);
  let minx = Math.max(bx0 - sx, Math.min(vp.minx, bx1 + sx - w));
  let miny = Math.max(by0 - sy, Math.min(vp.miny, by1 + sy - h));
  return { minx, miny, maxx: minx + w, maxy: miny + h };
}

export function panViewport(vp: ViewportBox, dx: number, dy: number): ViewportBox {
  return { minx: vp.minx + dx, miny: vp.miny + dy, maxx: vp.maxx + dx, maxy: vp.maxy + dy };
}

export function zoomViewport(vp: ViewportBox, factor: number,
                             cx?: number, cy?: number): ViewportBox {
  const px = cx ?? (vp.minx + vp.maxx) / 2;
  const py = cy ?? (vp.miny + vp.maxy) / 2;
  return {
    minx: px + (vp.minx - px) * factor,
    miny: py + (vp.miny - py) * factor,
    maxx: px + (vp.maxx - px) * factor,
    maxy: py + (vp.maxy - py) * factor,
  };
}

export function encodeViewState(v: ViewState): string {
  const q = new URLSearchParams();
  q.set("d", v.dataset);
  q.set("s", v.scenario);
  q.set("vp", [v.viewport.minx, v.viewport.miny, v.viewport.maxx, v.viewport.maxy]
    .map((n) => n.toPrecision(10).replace(/\.?0+$/, "")).join(","));
  q.set("k", v.params.kernel);
  q.set("r", String(v.params.bandwidth));
  q.set("a", String(v.params.alpha));
  q.set("w", String(v.params.walk_speed));
  q.set("m", v.params.mode);
  q.set("g", v.params.aggregate);
  if (v.compare) q.set("cmp", v.compare);
  return "#" + q.toString();
}

export function decodeViewState(fragment: string, fallback: ViewState): ViewState {
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!raw) return fallback;
  const q = new URLSearchParams(raw);
  const vpStr = q.get("vp");
  let viewport = fallback.viewport;
  if (vpStr) {
    const parts = vpStr.split(",").map(Number);
    if (parts.length === 4 && parts.every((n) => Number.isFinite(n))) {
      viewport = { minx: parts[0], miny: parts[1], maxx: parts[2], maxy: parts[3] };
    }
  }
  const params: FieldParams = {
    ...fallback.params,
    kernel: q.get("k") ?? fallback.params.kernel,
    bandwidth: Number(q.get("r") ?? fallback.params.bandwidth),
    alpha: Number(q.get("a") ?? fallback.params.alpha),
    walk_speed: Number(q.get("w") ?? fallback.params.walk_speed),
    mode: q.get("m") ?? fallback.params.mode,
    aggregate: q.get("g") ?? fallback.params.aggregate,
  };
  return {
    dataset: q.get("d") ?? fallback.dataset,
    scenario: q.get("s") ?? fallback.scenario,
    viewport,
    params,
    compare: q.get("cmp"),
  };
}

export function inBounds(x: number, y: number, bbox: [number, number, number, number],
                         slack = 0.2): boolean {
  const [bx0, by0, bx1, by1] = bbox;
  const sx = (bx1 - bx0) * slack;
  const sy = (by1 - by0) * slack;
  return x >= bx0 - sx && x <= bx1 + sx && y >= by0 - sy && y <= by1 + sy;
}
