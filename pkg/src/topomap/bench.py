"""Benchmark harness: topology density map vs planar KDE on a synthetic scene.

The scene is a regular grid with seeded random segment speeds and POI
placements; the default 13x21 grid has 273 intersections, matching the
reference study area scale. Absolute timings are machine-bound; the
interesting outputs are the trends across POI counts and image sizes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .field import FieldParams, Viewport, planar_kde_grid, rasterize
from .geodata import Poi, RawDataset, Way
from .scenario import Scenario, build_base

GRID_ROWS = 13
GRID_COLS = 21  # 13 * 21 = 273 intersections


@dataclass(frozen=True)
class BenchRow:
    method: str  # "topology" | "planar"
    width: int
    height: int
    pois: int
    ms: float

    @property
    def pixels_per_second(self) -> float:
        return self.width * self.height / (self.ms / 1000.0)


def synthetic_dataset(n_pois: int, rows: int = GRID_ROWS, cols: int = GRID_COLS,
                      spacing: float = 100.0, seed: int = 7) -> RawDataset:
    """Regular grid road network with randomized speeds and POI positions."""
    rng = np.random.default_rng(seed)
    xs = np.arange(cols) * spacing
    ys = np.arange(rows) * spacing
    node_xy = np.array([[x, y] for y in ys for x in xs], float)

    def nid(r, c):
        return r * cols + c

    ways = []
    for r in range(rows):
        for c in range(cols - 1):
            speed = float(rng.uniform(20.0, 60.0))
            ways.append(Way(len(ways), (nid(r, c), nid(r, c + 1)), False, speed))
    for r in range(rows - 1):
        for c in range(cols):
            speed = float(rng.uniform(20.0, 60.0))
            ways.append(Way(len(ways), (nid(r, c), nid(r + 1, c)), False, speed))

    w = (cols - 1) * spacing
    h = (rows - 1) * spacing
    pois = tuple(Poi(i, f"poi-{i}", float(rng.uniform(0, w)), float(rng.uniform(0, h)))
                 for i in range(n_pois))
    return RawDataset(crs="local-meters", node_xy=node_xy, ways=tuple(ways),
                      overrides=(), pois=pois,
                      node_keys=tuple(range(node_xy.shape[0])),
                      way_keys=tuple(range(len(ways))), poi_keys=tuple(range(n_pois)))


def synthetic_scenario(n_pois: int, seed: int = 7, params: FieldParams | None = None) -> Scenario:
    raw = synthetic_dataset(n_pois, seed=seed)
    return build_base("bench", raw, None, params or FieldParams(), "bench-base")


def scene_viewport(sc: Scenario, width: int, height: int) -> Viewport:
    minx, miny, maxx, maxy = sc.net.bbox()
    pad = 0.05 * max(maxx - minx, maxy - miny)
    return Viewport(minx - pad, miny - pad, width, height,
                    (maxx - minx + 2 * pad) / width)


def _time_once(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return (time.perf_counter() - t0) * 1000.0


def run_bench(sizes, poi_counts, methods=("topology", "planar"), repeats: int = 5,
              seed: int = 7, params: FieldParams | None = None, workers=None):
    """Median-of-repeats timings after one warmup; returns a list of BenchRow."""
    params = params or FieldParams()
    rows = []
    for n in poi_counts:
        sc = synthetic_scenario(n, seed=seed, params=params)
        ctx = sc.context()
        pts = np.array([[p.x, p.y] for p in sc.pois], float) if sc.pois else np.zeros((0, 2))
        for (w, h) in sizes:
            vp = scene_viewport(sc, w, h)
            for method in methods:
                if method == "topology":
                    fn = lambda: rasterize(ctx, vp, params, workers=workers)
                elif method == "planar":
                    fn = lambda: planar_kde_grid(pts, vp, params.kernel, params.bandwidth)
                else:
                    raise ValueError(f"unknown bench method {method!r}")
                fn()  # warmup
                times = [_time_once(fn) for _ in range(repeats)]
                rows.append(BenchRow(method=method, width=w, height=h, pois=n,
                                     ms=float(np.median(times))))
    return rows


def rows_to_csv(rows) -> str:
    lines = ["method,width,height,pois,ms"]
    for r in rows:
        lines.append(f"{r.method},{r.width},{r.height},{r.pois},{r.ms:.3f}")
    return "\n".join(lines) + "\n"
