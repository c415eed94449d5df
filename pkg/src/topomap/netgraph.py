"""Traffic-weighted directed graph over intersections and per-POI access trees."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnknownSegmentError
from .geodata import PoiAttachment, SegmentedNetwork

T_MIN = 1.0  # seconds; accessibility clamp near zero access time

KMH_TO_MS = 1.0 / 3.6


@dataclass(frozen=True)
class DirectedRoadGraph:
    n_vertices: int
    arc_from: np.ndarray  # (A,) int32
    arc_to: np.ndarray  # (A,) int32
    arc_time: np.ndarray  # (A,) float64 seconds
    arc_seg: np.ndarray  # (A,) int32 segment id
    # segment table snapshot (geometry orientation + lengths, for edits and NKDE)
    seg_from: np.ndarray  # (S,) int32
    seg_to: np.ndarray  # (S,) int32
    seg_length: np.ndarray  # (S,) float64 meters
    seg_oneway: np.ndarray  # (S,) bool
    # CSR adjacency over arc indices, keyed by arc_from
    indptr: np.ndarray  # (V+1,) int64
    order: np.ndarray  # (A,) int64 arc indices grouped by from-vertex

    @property
    def n_arcs(self) -> int:
        return int(self.arc_from.shape[0])

    def has_segment(self, segment_id: int) -> bool:
        return 0 <= segment_id < self.seg_length.shape[0]


def _csr(n_vertices, arc_from):
    order = np.argsort(arc_from, kind="stable")
    counts = np.bincount(arc_from, minlength=n_vertices)
    indptr = np.zeros(n_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order


def _make_graph(n_vertices, arc_from, arc_to, arc_time, arc_seg,
                seg_from, seg_to, seg_length, seg_oneway):
    arc_from = np.ascontiguousarray(arc_from, dtype=np.int32)
    arc_to = np.ascontiguousarray(arc_to, dtype=np.int32)
    arc_time = np.ascontiguousarray(arc_time, dtype=np.float64)
    arc_seg = np.ascontiguousarray(arc_seg, dtype=np.int32)
    indptr, order = _csr(n_vertices, arc_from)
    return DirectedRoadGraph(
        n_vertices=n_vertices, arc_from=arc_from, arc_to=arc_to, arc_time=arc_time,
        arc_seg=arc_seg, seg_from=seg_from, seg_to=seg_to, seg_length=seg_length,
        seg_oneway=seg_oneway, indptr=indptr, order=order,
    )


def build_graph(net: SegmentedNetwork) -> DirectedRoadGraph:
    """Arc travel time = length / speed; two-way segments yield both directions."""
    af, at, tm, sg = [], [], [], []
    S = len(net.segments)
    seg_from = np.zeros(S, np.int32)
    seg_to = np.zeros(S, np.int32)
    seg_length = np.zeros(S, np.float64)
    seg_oneway = np.zeros(S, bool)
    for s in net.segments:
        t = s.length / (s.speed * KMH_TO_MS)
        seg_from[s.segment_id] = s.from_node
        seg_to[s.segment_id] = s.to_node
        seg_length[s.segment_id] = s.length
        seg_oneway[s.segment_id] = s.oneway
        af.append(s.from_node)
        at.append(s.to_node)
        tm.append(t)
        sg.append(s.segment_id)
        if not s.oneway:
            af.append(s.to_node)
            at.append(s.from_node)
            tm.append(t)
            sg.append(s.segment_id)
    return _make_graph(net.n_intersections, np.asarray(af, np.int32) if af else np.zeros(0, np.int32),
                       np.asarray(at, np.int32) if at else np.zeros(0, np.int32),
                       np.asarray(tm) if tm else np.zeros(0),
                       np.asarray(sg, np.int32) if sg else np.zeros(0, np.int32),
                       seg_from, seg_to, seg_length, seg_oneway)


@dataclass(frozen=True)
class AccessTree:
    poi_id: int
    root: int  # nearest intersection
    root_offset: float  # connector time, seconds
    time_to: np.ndarray  # (V,) float64, inf when unreachable
    parent_arc: np.ndarray  # (V,) int32, -1 at the root / unreachable


def _dijkstra(g: DirectedRoadGraph, root: int, offset: float, weights: np.ndarray):
    dist = np.full(g.n_vertices, np.inf)
    parent = np.full(g.n_vertices, -1, np.int32)
    dist[root] = offset
    heap = [(offset, root)]
    indptr, order, arc_to = g.indptr, g.order, g.arc_to
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            a = order[k]
            v = arc_to[a]
            nd = d + weights[a]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = a
                heapq.heappush(heap, (nd, v))
    return dist, parent


def shortest_path_tree(g: DirectedRoadGraph, attach: PoiAttachment) -> AccessTree:
    """Exact single-source shortest access times, seeded at the connector time."""
    if not (0 <= attach.intersection < g.n_vertices):
        raise ValueError(f"attachment vertex {attach.intersection} not in graph")
    dist, parent = _dijkstra(g, attach.intersection, attach.connector_time, g.arc_time)
    return AccessTree(poi_id=attach.poi_id, root=attach.intersection,
                      root_offset=attach.connector_time, time_to=dist, parent_arc=parent)


def accessibility(time: float, alpha: float) -> float:
    """Inverse-power attenuation of access time, clamped below at 1 second."""
    if not math.isfinite(time):
        raise ValueError(f"non-finite access time {time}")
    if time < 0:
        raise ValueError(f"negative access time {time}")
    return max(time, T_MIN) ** (-alpha)


def accessibility_array(times: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorized accessibility; non-finite (unreachable) times map to 0."""
    out = np.zeros(times.shape)
    finite = np.isfinite(times)
    out[finite] = np.power(np.maximum(times[finite], T_MIN), -alpha)
    return out


@dataclass(frozen=True)
class AssignmentTable:
    poi_ids: tuple[int, ...]  # ascending
    winner: np.ndarray  # (V,) int32 poi id, -1 when unreachable from every POI
    best_time: np.ndarray  # (V,) float64
    accessibility: np.ndarray  # (V,) float64, 0 when unreachable


def assign_intersections(trees, alpha: float) -> AssignmentTable:
    """Per vertex, the POI with minimum access time (ties: lowest poi id)."""
    trees = sorted(trees, key=lambda t: t.poi_id)
    if not trees:
        raise ValueError("empty tree list")
    V = trees[0].time_to.shape[0]
    for t in trees:
        if t.time_to.shape[0] != V:
            raise ValueError("trees span different graphs")
    best = np.full(V, np.inf)
    winner = np.full(V, -1, np.int32)
    for t in trees:
        better = t.time_to < best
        winner[better] = t.poi_id
        np.minimum(best, t.time_to, out=best)
    return AssignmentTable(
        poi_ids=tuple(t.poi_id for t in trees), winner=winner, best_time=best,
        accessibility=accessibility_array(best, alpha),
    )


def remove_segment(g: DirectedRoadGraph, segment_id: int) -> DirectedRoadGraph:
    """New graph with both direction arcs of the segment deleted."""
    if not g.has_segment(segment_id):
        raise UnknownSegmentError(segment_id)
    keep = g.arc_seg != segment_id
    return _make_graph(g.n_vertices, g.arc_from[keep], g.arc_to[keep],
                       g.arc_time[keep], g.arc_seg[keep],
                       g.seg_from, g.seg_to, g.seg_length, g.seg_oneway)


def set_segment_speed(g: DirectedRoadGraph, segment_id: int, speed_kmh: float) -> DirectedRoadGraph:
    """New graph with the segment's arc times rebuilt from the new speed."""
    if not g.has_segment(segment_id):
        raise UnknownSegmentError(segment_id)
    if speed_kmh <= 0:
        raise ValueError(f"non-positive speed {speed_kmh}")
    times = g.arc_time.copy()
    hit = g.arc_seg == segment_id
    times[hit] = g.seg_length[segment_id] / (speed_kmh * KMH_TO_MS)
    return _make_graph(g.n_vertices, g.arc_from, g.arc_to, times, g.arc_seg,
                       g.seg_from, g.seg_to, g.seg_length, g.seg_oneway)


def length_distances_from(g: DirectedRoadGraph, seeds) -> np.ndarray:
    """Directed shortest path lengths (meters) from virtual seeds.

    ``seeds`` is an iterable of (vertex, initial_cost); used by NKDE where
    proximity is measured in meters rather than seconds.
    """
    lengths = g.seg_length[g.arc_seg]
    dist = np.full(g.n_vertices, np.inf)
    heap = []
    for v, c in seeds:
        if c < dist[v]:
            dist[v] = c
            heapq.heappush(heap, (c, int(v)))
    indptr, order, arc_to = g.indptr, g.order, g.arc_to
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            a = order[k]
            v = arc_to[a]
            nd = d + lengths[a]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def undirected_view(g: DirectedRoadGraph) -> DirectedRoadGraph:
    """Symmetrized copy (each present segment traversable both ways)."""
    segs = np.unique(g.arc_seg)
    af, at, tm, sg = [], [], [], []
    for s in segs:
        u, v = int(g.seg_from[s]), int(g.seg_to[s])
        t = float(g.arc_time[np.nonzero(g.arc_seg == s)[0][0]])
        af += [u, v]
        at += [v, u]
        tm += [t, t]
        sg += [int(s), int(s)]
    return _make_graph(g.n_vertices, np.asarray(af, np.int32) if af else np.zeros(0, np.int32),
                       np.asarray(at, np.int32) if at else np.zeros(0, np.int32),
                       np.asarray(tm) if tm else np.zeros(0),
                       np.asarray(sg, np.int32) if sg else np.zeros(0, np.int32),
                       g.seg_from, g.seg_to, g.seg_length, g.seg_oneway)
