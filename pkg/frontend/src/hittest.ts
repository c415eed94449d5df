// Screen-space segment hit testing for the edit interactions.

import type { SegmentInfo, ViewportBox } from "./types";

export interface ScreenTransform {
  viewport: ViewportBox;
  width: number; // pixels
  height: number;
}

export function worldToScreen(t: ScreenTransform, x: number, y: number): [number, number] {
  const sx = ((x - t.viewport.minx) / (t.viewport.maxx - t.viewport.minx)) * t.width;
  const sy = t.height - ((y - t.viewport.miny) / (t.viewport.maxy - t.viewport.miny)) * t.height;
  return [sx, sy];
}

export function screenToWorld(t: ScreenTransform, sx: number, sy: number): [number, number] {
  const x = t.viewport.minx + (sx / t.width) * (t.viewport.maxx - t.viewport.minx);
  const y = t.viewport.miny + ((t.height - sy) / t.height) * (t.viewport.maxy - t.viewport.miny);
  return [x, y];
}

function distToSegment(px: number, py: number, ax: number, ay: number,
                       bx: number, by: number): number {
  const vx = bx - ax;
  const vy = by - ay;
  const L2 = vx * vx + vy * vy;
  const t = L2 === 0 ? 0 : Math.max(0, Math.min(1, ((px - ax) * vx + (py - ay) * vy) / L2));
  const qx = ax + t * vx;
  const qy = ay + t * vy;
  return Math.hypot(px - qx, py - qy);
}

export function distanceToPolylinePx(t: ScreenTransform, sx: number, sy: number,
                                     geometry: [number, number][]): number {
  let best = Infinity;
  for (let i = 0; i + 1 < geometry.length; i++) {
    const [ax, ay] = worldToScreen(t, geometry[i][0], geometry[i][1]);
    const [bx, by] = worldToScreen(t, geometry[i + 1][0], geometry[i + 1][1]);
    best = Math.min(best, distToSegment(sx, sy, ax, ay, bx, by));
  }
  return best;
}

// nearest segment within tolerancePx of the screen point, or null
export function hitTestSegment(t: ScreenTransform, sx: number, sy: number,
                               segments: SegmentInfo[],
                               tolerancePx = 6): SegmentInfo | null {
  let best: SegmentInfo | null = null;
  let bestD = tolerancePx;
  for (const seg of segments) {
    const d = distanceToPolylinePx(t, sx, sy, seg.geometry);
    if (d < bestD || (d === bestD && best !== null && seg.segment_id < best.segment_id)) {
      best = seg;
      bestD = d;
    }
  }
  return best;
}
