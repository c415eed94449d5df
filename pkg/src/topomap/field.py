"""Density fields: kernels, planar KDE / NKDE baselines, and the
road-topology density evaluation over points and rasters.

Two density formulations are provided (see FieldParams.mode):

* ``amplitude-decay`` (default): each candidate intersection contributes its
  assigned accessibility attenuated by a kernel of the Euclidean walk
  distance, credited to its winning POI. Reproduces the fading-from-
  intersections visual and the per-face weighted-Voronoi partition.
* ``eq4-literal``: per POI, the total access time through the best candidate
  is converted to an accessibility value which is fed through the kernel with
  its own bandwidth in accessibility units. Kept for fidelity experiments.

All per-pixel evaluation funnels through the accel backend, so a raster is
bitwise identical to evaluating ``topo_density_at`` pixel by pixel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import accel
from .errors import ViewportError
from .faces import FaceSet
from .geodata import SegmentedNetwork
from .netgraph import AssignmentTable, DirectedRoadGraph, length_distances_from, undirected_view

KERNELS = ("gaussian", "sigmoid", "parabolic", "negexp")
_KERNEL_ID = {k: i for i, k in enumerate(KERNELS)}
MODES = ("amplitude-decay", "eq4-literal")
AGGREGATES = ("max", "sum")
FALLBACK_K = 8  # outer-region candidate count


@dataclass(frozen=True)
class FieldParams:
    kernel: str = "gaussian"
    bandwidth: float = 300.0  # meters (0.003 map degrees at the study latitude)
    alpha: float = 1.0
    walk_speed: float = 1.4  # m/s
    mode: str = "amplitude-decay"
    aggregate: str = "max"
    cutoff_multiple: float = 3.0
    acc_bandwidth: float = 0.003  # eq4-literal bandwidth, accessibility units

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"aggregate must be one of {AGGREGATES}, got {self.aggregate!r}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError("bandwidth must be positive")
        if not self.walk_speed > 0:
            raise ValueError("walk_speed must be positive")
        if not self.cutoff_multiple >= 1:
            raise ValueError("cutoff_multiple must be >= 1")
        if not self.acc_bandwidth > 0:
            raise ValueError("acc_bandwidth must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def max_radius(self) -> float:
        return self.cutoff_multiple * self.bandwidth

    def with_(self, **kw) -> "FieldParams":
        return replace(self, **kw)


def kernel_eval(kind: str, u):
    """K(u) for u >= 0; K(0)=1 and K non-increasing for every kind."""
    u = np.asarray(u, float)
    if np.any(~np.isfinite(u)) or np.any(u < 0):
        raise ValueError("kernel argument must be finite and non-negative")
    kid = _KERNEL_ID[kind]
    if kid == 0:
        out = np.exp(-0.5 * u * u)
    elif kid == 1:
        out = 2.0 / (1.0 + np.exp(u))
    elif kid == 2:
        out = np.maximum(0.0, 1.0 - u * u)
    else:
        out = np.exp(-u)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NetworkAnchor:
    segment_id: int
    offset: float  # meters from the segment's from-intersection


@dataclass(frozen=True)
class EventSet:
    points: np.ndarray  # (n, 2) meters
    anchors: tuple[NetworkAnchor, ...] | None = None

    def __post_init__(self):
        if self.points.shape[0] == 0:
            raise ValueError("event set must be nonempty")


def planar_kde(events: EventSet, s, kind: str, r: float) -> float:
    """Classic planar KDE at a single location (full summation, no cutoff)."""
    s = np.asarray(s, float)
    d = np.sqrt((events.points[:, 0] - s[0]) ** 2 + (events.points[:, 1] - s[1]) ** 2)
    return float(np.sum(kernel_eval(kind, d / r) / (math.pi * r * r)))


def planar_kde_grid(points: np.ndarray, viewport: "Viewport", kind: str, r: float,
                    chunk_rows: int = 128) -> np.ndarray:
    """Planar KDE evaluated on a raster grid (benchmark baseline).

    Accumulates one event at a time over row chunks to keep temporaries
    cache-sized; cost grows with both pixel count and event count.
    """
    xs, ys = viewport.pixel_centers()
    out = np.zeros((viewport.height, viewport.width))
    norm = 1.0 / (math.pi * r * r)
    for j0 in range(0, viewport.height, chunk_rows):
        j1 = min(j0 + chunk_rows, viewport.height)
        yy = ys[j0:j1][:, None]
        xx = xs[None, :]
        acc = np.zeros((j1 - j0, viewport.width))
        for ex, ey in points:
            d = np.sqrt((xx - ex) ** 2 + (yy - ey) ** 2)
            acc += kernel_eval(kind, d / r)
        out[j0:j1] = norm * acc
    return out


def _segment_arc_presence(g: DirectedRoadGraph):
    has_fwd = np.zeros(g.seg_length.shape[0], bool)
    has_rev = np.zeros(g.seg_length.shape[0], bool)
    if g.n_arcs:
        fwd = g.arc_from == g.seg_from[g.arc_seg]
        has_fwd[g.arc_seg[fwd]] = True
        has_rev[g.arc_seg[~fwd]] = True
    return has_fwd, has_rev


def nkde(g: DirectedRoadGraph, events: EventSet, sample_spacing: float, kind: str,
         r: float, directed: bool = True):
    """Network KDE sampled along every segment (spacing grid plus endpoints).

    Returns a list of (segment_id, arc-length position, density). Distance is
    the directed network travel distance in meters; pass directed=False for
    the symmetric variant.
    """
    if events.anchors is None or len(events.anchors) != events.points.shape[0]:
        raise ValueError("nkde requires every event to carry a network anchor")
    if sample_spacing <= 0:
        raise ValueError("sample_spacing must be positive")
    gg = g if directed else undirected_view(g)
    has_fwd, has_rev = _segment_arc_presence(gg)
    seg_len = gg.seg_length

    event_dists = []
    for anc in events.anchors:
        L = float(seg_len[anc.segment_id])
        off = float(anc.offset)
        if not 0.0 <= off <= L:
            raise ValueError(f"anchor offset {off} outside segment length {L}")
        seeds = []
        if off == 0.0:
            seeds.append((int(gg.seg_from[anc.segment_id]), 0.0))
        if off == L:
            seeds.append((int(gg.seg_to[anc.segment_id]), 0.0))
        if has_fwd[anc.segment_id] and off < L:
            seeds.append((int(gg.seg_to[anc.segment_id]), L - off))
        if has_rev[anc.segment_id] and off > 0.0:
            seeds.append((int(gg.seg_from[anc.segment_id]), off))
        event_dists.append(length_distances_from(gg, seeds))

    out = []
    for sid in range(seg_len.shape[0]):
        L = float(seg_len[sid])
        pos = list(np.arange(0.0, L, sample_spacing))
        if not pos or L - pos[-1] > 1e-9:
            pos.append(L)
        u, v = int(gg.seg_from[sid]), int(gg.seg_to[sid])
        for p in pos:
            val = 0.0
            for anc, dist in zip(events.anchors, event_dists):
                options = []
                if has_fwd[sid] or p == 0.0:
                    options.append(dist[u] + p)
                if has_rev[sid] or p == L:
                    options.append(dist[v] + (L - p))
                if anc.segment_id == sid:
                    off = float(anc.offset)
                    if p == off:
                        options.append(0.0)
                    if has_fwd[sid] and p >= off:
                        options.append(p - off)
                    if has_rev[sid] and p <= off:
                        options.append(off - p)
                d = min(options) if options else math.inf
                if math.isfinite(d):
                    val += kernel_eval(kind, d / r) / r
            out.append((sid, p, val))
    return out


def candidate_intersections(p, fset: FaceSet, net: SegmentedNetwork,
                            fallback_k: int = FALLBACK_K, max_radius: float = 900.0,
                            kdtree: cKDTree | None = None) -> np.ndarray:
    """Candidate anchors for a point: its face's boundary intersections, or
    the k nearest intersections within max_radius when in the outer region."""
    p = np.asarray(p, float)
    fid = int(fset.locate(p[None, :])[0])
    if fid >= 0:
        return fset.candidates(fid)
    if net.n_intersections == 0:
        return np.zeros(0, np.int32)
    tree = kdtree if kdtree is not None else cKDTree(net.intersection_xy)
    k = min(fallback_k, net.n_intersections)
    d, idx = tree.query(p, k=k, distance_upper_bound=max_radius)
    d = np.atleast_1d(d)
    idx = np.atleast_1d(idx)
    return idx[np.isfinite(d)].astype(np.int32)


@dataclass(frozen=True)
class PointDensity:
    per_poi: dict  # poi id -> density
    via: dict  # poi id -> intersection id or None
    dominant: int | None
    value: float


@dataclass(frozen=True)
class Viewport:
    origin_x: float
    origin_y: float
    width: int
    height: int
    scale: float  # meters per pixel

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ViewportError(
                f"viewport must have positive dimensions, got {self.width}x{self.height}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ViewportError(f"viewport scale must be positive, got {self.scale}")

    def pixel_centers(self):
        xs = self.origin_x + (np.arange(self.width) + 0.5) * self.scale
        ys = self.origin_y + (np.arange(self.height) + 0.5) * self.scale
        return xs, ys

    @staticmethod
    def from_bbox(minx, miny, maxx, maxy, width, height) -> "Viewport":
        if maxx <= minx or maxy <= miny:
            raise ViewportError("empty viewport extent")
        if int(width) <= 0 or int(height) <= 0:
            raise ViewportError(f"viewport must have positive dimensions, got {width}x{height}")
        return Viewport(minx, miny, int(width), int(height), (maxx - minx) / int(width))


_EMPTY_FACES = FaceSet(faces=(), _locate_order=np.zeros(0, np.int64))


@dataclass
class EvalContext:
    """Immutable-by-convention bundle of everything pixel evaluation needs."""
    ix: np.ndarray  # (V,) contiguous intersection x
    iy: np.ndarray  # (V,)
    acc: np.ndarray  # (V,) accessibility of the winning POI
    winner_ord: np.ndarray  # (V,) int32 POI ordinal, -1 none
    poi_ids: tuple  # ascending; ordinal -> poi id
    times: np.ndarray  # (n_pois, V) seconds, rows in poi_ids order
    faces: FaceSet
    kdtree: cKDTree | None

    @property
    def n_pois(self) -> int:
        return len(self.poi_ids)

    @property
    def n_vertices(self) -> int:
        return int(self.ix.shape[0])


def build_eval_context(net: SegmentedNetwork, trees, assign: AssignmentTable,
                       fset: FaceSet | None) -> EvalContext:
    trees = sorted(trees, key=lambda t: t.poi_id)
    poi_ids = tuple(t.poi_id for t in trees)
    V = net.n_intersections
    ord_of = {pid: i for i, pid in enumerate(poi_ids)}
    winner_ord = np.full(V, -1, np.int32)
    for i in range(V):
        w = int(assign.winner[i]) if poi_ids else -1
        if w >= 0:
            winner_ord[i] = ord_of[w]
    times = np.vstack([t.time_to for t in trees]) if trees else np.zeros((0, V))
    return EvalContext(
        ix=np.ascontiguousarray(net.intersection_xy[:, 0], float),
        iy=np.ascontiguousarray(net.intersection_xy[:, 1], float),
        acc=np.ascontiguousarray(assign.accessibility, float) if poi_ids else np.zeros(V),
        winner_ord=winner_ord, poi_ids=poi_ids,
        times=np.ascontiguousarray(times, float),
        faces=fset if fset is not None else _EMPTY_FACES,
        kdtree=cKDTree(net.intersection_xy) if V else None,
    )


def _eval_shared(ctx: EvalContext, params: FieldParams, px, py, cand, want_per_poi):
    kid = _KERNEL_ID[params.kernel]
    agg = params.aggregate == "sum"
    if params.mode == "amplitude-decay":
        return accel.eval_amplitude_shared(
            px, py, cand, ctx.ix, ctx.iy, ctx.acc, ctx.winner_ord, ctx.n_pois,
            kid, params.bandwidth, agg, want_per_poi)
    return accel.eval_eq4_shared(
        px, py, cand, ctx.ix, ctx.iy, ctx.times, kid, params.acc_bandwidth,
        params.alpha, params.walk_speed, params.cutoff_multiple, agg, want_per_poi)


def _eval_ragged(ctx: EvalContext, params: FieldParams, px, py, cand_pad, want_per_poi):
    kid = _KERNEL_ID[params.kernel]
    agg = params.aggregate == "sum"
    if params.mode == "amplitude-decay":
        return accel.eval_amplitude_ragged(
            px, py, cand_pad, ctx.ix, ctx.iy, ctx.acc, ctx.winner_ord, ctx.n_pois,
            kid, params.bandwidth, agg, want_per_poi)
    return accel.eval_eq4_ragged(
        px, py, cand_pad, ctx.ix, ctx.iy, ctx.times, kid, params.acc_bandwidth,
        params.alpha, params.walk_speed, params.cutoff_multiple, agg, want_per_poi)


def topo_density_at(p, assign: AssignmentTable, trees, candidates, params: FieldParams,
                    net: SegmentedNetwork | None = None,
                    ctx: EvalContext | None = None) -> PointDensity:
    """Topology density at a single point given its candidate anchors."""
    if ctx is None:
        if net is None:
            raise ValueError("topo_density_at needs either net or a prebuilt ctx")
        ctx = build_eval_context(net, trees, assign, None)
    p = np.asarray(p, float)
    cand = np.ascontiguousarray(np.asarray(candidates, np.int32))
    value, dom, via, per, pvia = _eval_shared(
        ctx, params, np.array([float(p[0])]), np.array([float(p[1])]), cand, True)
    per_map = {pid: float(per[0, i]) for i, pid in enumerate(ctx.poi_ids)}
    via_map = {pid: (int(pvia[0, i]) if pvia[0, i] >= 0 else None)
               for i, pid in enumerate(ctx.poi_ids)}
    dominant = ctx.poi_ids[int(dom[0])] if dom[0] >= 0 else None
    return PointDensity(per_poi=per_map, via=via_map, dominant=dominant,
                        value=float(value[0]))


@dataclass
class DensityRaster:
    viewport: Viewport
    params: FieldParams
    value: np.ndarray  # (H, W) float64, row 0 at miny
    dominant: np.ndarray  # (H, W) int32 POI id, -1 none
    via: np.ndarray  # (H, W) int32 intersection id, -1 none
    face_id: np.ndarray  # (H, W) int32, -1 outer
    poi_ids: tuple
    assign_winner: np.ndarray  # (V,) int32 POI id snapshot
    assign_acc: np.ndarray  # (V,) float64 snapshot
    times: np.ndarray  # (n_pois, V) snapshot
    per_poi: np.ndarray | None = None  # (H, W, n_pois) when requested


def eval_pixels(ctx: EvalContext, params: FieldParams, px, py, fid, want_per_poi=False):
    """Evaluate arbitrary pixel centers given their precomputed face ids.

    The single evaluation path shared by full rasterization, incremental
    recomputation, and (via 1-pixel calls) topo_density_at; per-pixel results
    are independent of how pixels are batched.
    """
    n = px.shape[0]
    value = np.zeros(n)
    dom_ord = np.full(n, -1, np.int32)
    via = np.full(n, -1, np.int32)
    per = np.zeros((n, ctx.n_pois)) if want_per_poi else None

    order = np.argsort(fid, kind="stable")
    sorted_fid = fid[order]
    run_starts = np.concatenate([[0], np.nonzero(np.diff(sorted_fid))[0] + 1, [n]])
    for r in range(run_starts.shape[0] - 1):
        sel = order[run_starts[r]:run_starts[r + 1]]
        if sel.size == 0:
            continue
        f = int(sorted_fid[run_starts[r]])
        bpx = np.ascontiguousarray(px[sel])
        bpy = np.ascontiguousarray(py[sel])
        if f >= 0:
            cand = np.ascontiguousarray(ctx.faces.candidates(int(f)))
            v, d, w, pp, _ = _eval_shared(ctx, params, bpx, bpy, cand, want_per_poi)
        else:
            k = min(FALLBACK_K, ctx.n_vertices)
            if k == 0 or ctx.kdtree is None:
                continue
            dist, idx = ctx.kdtree.query(np.column_stack([bpx, bpy]), k=k,
                                         distance_upper_bound=params.max_radius)
            if k == 1:
                dist = dist[:, None]
                idx = idx[:, None]
            cand_pad = np.ascontiguousarray(
                np.where(np.isfinite(dist), idx, -1).astype(np.int32))
            v, d, w, pp, _ = _eval_ragged(ctx, params, bpx, bpy, cand_pad, want_per_poi)
        value[sel] = v
        dom_ord[sel] = d
        via[sel] = w
        if want_per_poi:
            per[sel] = pp
    return value, dom_ord, via, per


def _eval_pixel_block(ctx, params, xs, ys, j0, j1, want_per_poi):
    W = xs.shape[0]
    n = (j1 - j0) * W
    px = np.tile(xs, j1 - j0)
    py = np.repeat(ys[j0:j1], W)
    if ctx.faces.faces:
        fid = ctx.faces.locate_grid(xs, ys[j0:j1]).ravel()
    else:
        fid = np.full(n, -1, np.int32)
    value, dom_ord, via, per = eval_pixels(ctx, params, px, py, fid, want_per_poi)
    return j0, j1, value, dom_ord, via, fid, per


def rasterize(ctx: EvalContext, viewport: Viewport, params: FieldParams,
              workers: int | None = None, want_per_poi: bool = False,
              max_pixels: int = 64_000_000) -> DensityRaster:
    """Evaluate the density field at every pixel center of the viewport.

    Deterministic for fixed inputs and independent of the worker count:
    pixels are evaluated independently and reassembled in raster order.
    """
    H, W = viewport.height, viewport.width
    if H * W > max_pixels:
        raise ViewportError(f"viewport {W}x{H} exceeds the {max_pixels}-pixel guard")
    xs, ys = viewport.pixel_centers()
    nworkers = accel.worker_count(workers)
    bounds = np.linspace(0, H, min(nworkers, H) + 1, dtype=int)
    blocks = [(int(bounds[i]), int(bounds[i + 1])) for i in range(len(bounds) - 1)
              if bounds[i + 1] > bounds[i]]

    value = np.zeros((H, W))
    dom_ord = np.full((H, W), -1, np.int32)
    via = np.full((H, W), -1, np.int32)
    fid = np.full((H, W), -1, np.int32)
    per = np.zeros((H, W, ctx.n_pois)) if want_per_poi else None

    def run(b):
        return _eval_pixel_block(ctx, params, xs, ys, b[0], b[1], want_per_poi)

    if len(blocks) == 1:
        results = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(run, blocks))
    for j0, j1, v, d, w, f, pp in results:
        value[j0:j1] = v.reshape(j1 - j0, W)
        dom_ord[j0:j1] = d.reshape(j1 - j0, W)
        via[j0:j1] = w.reshape(j1 - j0, W)
        fid[j0:j1] = f.reshape(j1 - j0, W)
        if want_per_poi:
            per[j0:j1] = pp.reshape(j1 - j0, W, ctx.n_pois)

    if ctx.poi_ids:
        poi_id_arr = np.asarray(ctx.poi_ids, np.int32)
        dominant = np.where(dom_ord >= 0, poi_id_arr[np.maximum(dom_ord, 0)],
                            np.int32(-1)).astype(np.int32)
        winner_id = np.full(ctx.n_vertices, -1, np.int32)
        has = ctx.winner_ord >= 0
        winner_id[has] = poi_id_arr[ctx.winner_ord[has]]
    else:
        dominant = np.full((H, W), -1, np.int32)
        winner_id = np.full(ctx.n_vertices, -1, np.int32)
    return DensityRaster(
        viewport=viewport, params=params, value=value, dominant=dominant, via=via,
        face_id=fid, poi_ids=ctx.poi_ids, assign_winner=winner_id,
        assign_acc=ctx.acc.copy(), times=ctx.times.copy(), per_poi=per,
    )


def access_times_at(p, ixy: np.ndarray, trees, candidates, walk_speed: float):
    """Per-POI total access time through the best candidate anchor.

    Returns {poi_id: (seconds or inf, via intersection or None)}; ties on
    time resolve to the lowest intersection id.
    """
    p = np.asarray(p, float)
    out = {}
    cand = [int(c) for c in np.asarray(candidates).ravel()]
    for t in sorted(trees, key=lambda tr: tr.poi_id):
        best = math.inf
        via = None
        for v in cand:
            d = math.hypot(ixy[v, 0] - p[0], ixy[v, 1] - p[1])
            tot = float(t.time_to[v]) + d / walk_speed
            if tot < best or (tot == best and math.isfinite(tot) and via is not None and v < via):
                best = tot
                via = v
        out[t.poi_id] = (best, via if math.isfinite(best) else None)
    return out
